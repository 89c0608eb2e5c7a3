"""Command line entry point.

Exit status: 0 on success, 1 on bad input, 2 when ``verify-bounds`` finds
a measured deviation above its bound.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from whackamole.discrepancy import bound_for, generic_bounds, path_deviation, path_interval, report_at
from whackamole.profile import PathProfile, ProfileError, parse_profile
from whackamole.sim import ConfigError, SimConfig, run_sim
from whackamole.sim.engine import TRACE_COLUMNS
from whackamole.spray import Method, RotationPolicy, SpraySeed, SprayState, random_seed
from whackamole.update import UPDATES, InfeasibleUpdate, ResidualCursor

FIVE_PATH_PROFILE = "127,400,200,173,124"


class UsageError(Exception):
    pass


def _frac(x: Fraction) -> str:
    return str(x)


def _dump(payload, pretty: bool) -> str:
    if pretty:
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def _seed(text: str) -> SpraySeed:
    try:
        return SpraySeed.parse(text)
    except ValueError as exc:
        raise UsageError(f"bad seed {text!r}, expected sa,sb") from exc


def _profile(text: str, m: int | None = None) -> PathProfile:
    profile = parse_profile(text)
    if m is not None and profile.m != m:
        raise UsageError(f"profile sums to {profile.m}, not m={m}")
    if profile.ell is None:
        raise UsageError(f"profile total {profile.m} is not a power of two")
    return profile


def cmd_trace(args) -> str:
    profile = _profile(args.profile, args.m)
    if profile.ell < 1:
        raise UsageError("need m >= 2")
    seed = _seed(args.seed)
    rotation = RotationPolicy(args.rotation)
    entropy = random.Random(args.rotation_seed) if rotation is RotationPolicy.EVERY_PERIOD else None
    try:
        state = SprayState(profile.ell, seed, Method(args.method), rotation, entropy, j=args.start)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["j", "selection_point", "path", "sa", "sb", "method"])
    for _ in range(args.count):
        d = state.next_path(profile)
        writer.writerow([d.j, d.point, d.path, d.seed.sa, d.seed.sb, args.method])
    return out.getvalue()


def deviation_report(method: Method, seed: SpraySeed, profile: PathProfile, start: int | None = None) -> dict:
    per_path, bounds = [], []
    sound = True
    for i in range(profile.n):
        lo, hi = profile.interval(i)
        entry = {"path": i, "balls": profile.b[i], "interval": [lo, hi - 1]}
        interval = path_interval(profile, i)
        if interval is None:
            entry.update(deviation="0", empty=True)
            per_path.append(entry)
            bounds.append({"path": i, "bound": "0"})
            continue
        dev = path_deviation(method, seed, profile, i, start)
        entry["deviation"] = _frac(dev)
        entry["deviation_float"] = round(float(dev), 6)
        if start is not None:
            rep = report_at(method, seed, interval, start)
            entry.update(maxdisc=_frac(rep.maxdisc), mindisc=_frac(rep.mindisc), start=start)
        bound = bound_for(method, interval.ia, interval.ib, interval.ell)
        sound = sound and dev <= bound
        per_path.append(entry)
        bounds.append(
            {
                "path": i,
                "bound": _frac(bound),
                "generic": {k: _frac(v) for k, v in generic_bounds(method, interval.ia, interval.ib, interval.ell).items()},
            }
        )
    return {
        "m": profile.m,
        "method": method.value,
        "seed": [seed.sa, seed.sb],
        "per_path": per_path,
        "bounds": bounds,
        "sound": sound,
    }


def cmd_deviation(args) -> str:
    profile = _profile(args.profile, args.m)
    seed = _seed(args.seed)
    method = Method(args.method)
    try:
        seed.check(profile.ell)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = deviation_report(method, seed, profile, args.start)
    if args.pretty:
        lines = [f"m={profile.m} method={method.value} seed={seed.sa},{seed.sb}"]
        for entry, bound in zip(report["per_path"], report["bounds"]):
            lines.append(
                f"  path {entry['path']}: balls={entry['balls']:>6} dev={float(Fraction(entry['deviation'])):8.4f}"
                f" bound={float(Fraction(bound['bound'])):8.4f}"
            )
        lines.append(f"  sound: {report['sound']}")
        return "\n".join(lines) + "\n"
    return _dump(report, False)


def _parse_removal(text: str, n: int) -> tuple[str, object]:
    if ":" in text:
        j, ej = (int(tok) for tok in text.split(":"))
        return "single", (j, ej)
    counts = [int(tok) for tok in text.split(",")]
    if len(counts) != n:
        raise UsageError(f"removal has {len(counts)} entries for {n} paths")
    return "vector", counts


def cmd_update(args) -> str:
    profile = parse_profile(args.profile)
    if not 0 <= args.cursor < profile.n:
        raise UsageError(f"cursor {args.cursor} outside [0, {profile.n})")
    cursor = ResidualCursor(args.cursor)
    kind, removal = _parse_removal(args.remove, profile.n)
    result = {}
    try:
        if args.embodiment == 1:
            if kind != "single":
                nonzero = [(i, e) for i, e in enumerate(removal) if e]
                if len(nonzero) > 1:
                    raise UsageError("embodiment 1 removes from a single bin; use j:ej")
                removal = nonzero[0] if nonzero else (0, 0)
            UPDATES[1](profile, cursor, *removal)
        else:
            if kind == "single":
                j, ej = removal
                if not 0 <= j < profile.n:
                    raise UsageError(f"no bin {j}")
                vec = [0] * profile.n
                vec[j] = ej
                removal = vec
            out = UPDATES[args.embodiment](profile, cursor, removal)
            if args.embodiment == 4:
                result["L"] = out
    except InfeasibleUpdate as exc:
        raise UsageError(str(exc)) from exc
    result.update(counts=profile.b, cursor=cursor.r, m=profile.m)
    return _dump(result, args.pretty)


def cmd_sim(args) -> str:
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    if args.trace_csv:
        raw["trace"] = True
    config = SimConfig.from_json(raw)
    report = run_sim(config)
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            writer.writerows(report.trace)
    payload = report.to_json()
    if args.summary:
        payload.pop("feedback")
    return _dump(payload, args.pretty)


def random_profile(m: int, rng: random.Random, max_paths: int = 8) -> PathProfile:
    n = rng.randint(2, max_paths)
    cuts = sorted(rng.randint(0, m) for _ in range(n - 1))
    edges = [0, *cuts, m]
    return PathProfile([b - a for a, b in zip(edges, edges[1:])])


def _sweep_point(method: Method, seed: SpraySeed, profile: PathProfile) -> tuple[Fraction, list[str]]:
    ell = profile.ell
    worst = Fraction(0)
    problems = []
    cap = ell * (2 if method is Method.SHUFFLE2 else 1)
    for i in range(profile.n):
        interval = path_interval(profile, i)
        if interval is None:
            continue
        dev = path_deviation(method, seed, profile, i)
        worst = max(worst, dev)
        bound = bound_for(method, interval.ia, interval.ib, ell)
        if dev > bound or dev > cap:
            problems.append(
                f"m={profile.m} {method.value} seed={seed.sa},{seed.sb} profile={profile.b} path={i} dev={dev} bound={bound}"
            )
    return worst, problems


def verify_bounds(
    ms: list[int],
    methods: list[Method],
    seeds: int,
    profiles: int,
    rng_seed: int,
    workers: int = 1,
    include_reference: bool = True,
) -> dict:
    rng = random.Random(rng_seed)
    jobs = []
    for m in ms:
        if m < 2 or m & (m - 1):
            raise UsageError(f"m={m} is not a power of two >= 2")
        ell = m.bit_length() - 1
        points = [(random_seed(ell, rng), random_profile(m, rng)) for _ in range(seeds * profiles)]
        if include_reference and m == 1024:
            points.append((SpraySeed(333, 735), parse_profile(FIVE_PATH_PROFILE)))
        for method in methods:
            jobs.extend((m, method, seed, prof) for seed, prof in points)
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        results = list(pool.map(lambda job: _sweep_point(job[1], job[2], job[3]), jobs))
    summary: dict[tuple[int, str], dict] = {}
    violations = []
    for (m, method, _, _), (worst, problems) in zip(jobs, results):
        ell = m.bit_length() - 1
        key = (m, method.value)
        row = summary.setdefault(
            key,
            {
                "m": m,
                "method": method.value,
                "points": 0,
                "max_deviation": Fraction(0),
                "bound": Fraction(ell * (2 if method is Method.SHUFFLE2 else 1)),
            },
        )
        row["points"] += 1
        row["max_deviation"] = max(row["max_deviation"], worst)
        violations.extend(problems)
    rows = []
    for key in sorted(summary):
        row = summary[key]
        rows.append(
            {
                **row,
                "max_deviation": _frac(row["max_deviation"]),
                "max_deviation_float": round(float(row["max_deviation"]), 6),
                "bound": _frac(row["bound"]),
            }
        )
    return {"rows": rows, "violations": violations, "ok": not violations}


def cmd_verify_bounds(args) -> tuple[str, int]:
    methods = [Method(x) for x in args.methods.split(",")]
    result = verify_bounds(args.m, methods, args.seeds, args.profiles, args.rng_seed, args.workers)
    if args.pretty:
        lines = [
            f"m={r['m']:>5} {r['method']:<9} points={r['points']:>4} max_dev={r['max_deviation_float']:.4f} bound={r['bound']}"
            for r in result["rows"]
        ]
        lines += [f"VIOLATION {v}" for v in result["violations"]]
        lines.append("ok" if result["ok"] else "FAILED")
        text = "\n".join(lines) + "\n"
    else:
        text = _dump(result, False)
    return text, 0 if result["ok"] else 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--pretty", action="store_true", help="human-readable output")
    parser = argparse.ArgumentParser(prog="whackamole", description="Deterministic multipath packet spraying")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", parents=[common], help="per-packet spray decisions as CSV")
    p.add_argument("--profile", required=True, help="comma-separated ball counts")
    p.add_argument("--m", type=int)
    p.add_argument("--method", default="shuffle1", choices=[x.value for x in Method])
    p.add_argument("--seed", default="0,1", help="sa,sb")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--rotation", default="never", choices=[x.value for x in RotationPolicy])
    p.add_argument("--rotation-seed", type=int, default=0)

    p = sub.add_parser("deviation", parents=[common], help="measured per-path deviation and bounds")
    p.add_argument("--profile", default=FIVE_PATH_PROFILE)
    p.add_argument("--m", type=int)
    p.add_argument("--method", default="shuffle1", choices=[x.value for x in Method])
    p.add_argument("--seed", default="0,1")
    p.add_argument("--start", type=int, help="fixed start counter; omit for the sup over starts")

    p = sub.add_parser("update", parents=[common], help="apply one profile update")
    p.add_argument("--embodiment", type=int, required=True, choices=[1, 2, 3, 4])
    p.add_argument("--profile", required=True)
    p.add_argument("--remove", required=True, help="j:ej or comma-separated per-bin counts")
    p.add_argument("--cursor", type=int, default=0)

    p = sub.add_parser("sim", parents=[common], help="run a simulation config")
    p.add_argument("--config", required=True)
    p.add_argument("--trace-csv", help="also write a per-packet trace")
    p.add_argument("--summary", action="store_true", help="omit the per-packet feedback log")

    p = sub.add_parser("verify-bounds", parents=[common], help="sweep seeds and profiles against the deviation bounds")
    p.add_argument("--m", type=int, nargs="+", default=[16, 64, 256, 1024])
    p.add_argument("--methods", default="shuffle1,shuffle2")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--profiles", type=int, default=5)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    status = 0
    try:
        if args.command == "trace":
            text = cmd_trace(args)
        elif args.command == "deviation":
            text = cmd_deviation(args)
        elif args.command == "update":
            text = cmd_update(args)
        elif args.command == "sim":
            text = cmd_sim(args)
        else:
            text, status = cmd_verify_bounds(args)
    except (UsageError, ProfileError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
