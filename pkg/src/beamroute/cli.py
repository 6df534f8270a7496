"""Experiment runner: scenes in, routing reports and sweep series out.

Single entry point for loading or generating a scene, running one
solver, or sweeping the element count or candidate budget across a
value list.  Reports come out as text tables, fixed-header CSV or
JSON.  Output bytes are a pure function of config and seed; timing is
opt-in so repeated runs stay byte-identical.

Exit codes: 0 feasible, 2 infeasible (or a sweep with failed points),
1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass

import numpy as np

from .scene import (
    DEFAULT_LOS_THRESHOLD,
    DEFAULT_MIN_FAR_FIELD,
    Scene,
    SceneError,
    dump_scene_document,
    load_scene,
    load_scene_file,
)
from .solver import ALGORITHMS, SolveParams, SolverError, solve

FORMATS = ("table", "csv", "json")
SWEEP_VARIABLES = ("M", "Q")

GENERATOR_RESTARTS = 60
PLACEMENT_TRIES = 200


class CliError(ValueError):
    """Raised for bad configs, bad generator specs or exhausted retries."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one invocation depends on.

    Exactly one of ``scene_path`` and ``generate`` must be set.  Sweep
    values must be positive and strictly increasing.
    """

    scene_path: str | None = None
    generate: str | None = None
    seed: int = 0
    algorithm: str = "proposed"
    paths: int = 20
    elements: int | None = None
    antennas: int | None = None
    sweep: str | None = None
    values: tuple[int, ...] = ()
    fmt: str = "table"
    out: str | None = None
    timing: bool = False

    def __post_init__(self) -> None:
        if (self.scene_path is None) == (self.generate is None):
            raise CliError("exactly one of scene path and generator spec required")
        if self.algorithm not in ALGORITHMS:
            raise CliError(f"unknown algorithm {self.algorithm!r}")
        if self.fmt not in FORMATS:
            raise CliError(f"unknown output format {self.fmt!r}")
        if self.sweep is not None:
            if self.sweep not in SWEEP_VARIABLES:
                raise CliError(f"sweep variable must be one of {SWEEP_VARIABLES}")
            if not self.values:
                raise CliError("sweep requires a value list")
            if any(v < 1 for v in self.values):
                raise CliError("sweep values must be positive")
            if any(b <= a for a, b in zip(self.values, self.values[1:])):
                raise CliError("sweep values must be strictly increasing")
        elif self.values:
            raise CliError("value list given without a sweep variable")


# -- scene generation --------------------------------------------------

_SPEC_RE = re.compile(r"^\s*(grid|random)\s*\(\s*([^)]*?)\s*\)\s*$")


def _spec_numbers(body: str, spec: str) -> list[float]:
    parts = [p.strip() for p in body.split(",")]
    if any(not p for p in parts):
        raise CliError(f"malformed generator spec {spec!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise CliError(f"malformed generator spec {spec!r}") from None


def _grid_document(rows: int, cols: int, spacing: float, users: int) -> str:
    if rows < 1 or cols < 1 or users < 0:
        raise CliError("grid needs positive rows and cols and users >= 0")
    if spacing < DEFAULT_MIN_FAR_FIELD:
        raise CliError(f"grid spacing below the far-field limit {DEFAULT_MIN_FAR_FIELD} m")
    if spacing > DEFAULT_LOS_THRESHOLD:
        raise CliError(
            f"grid spacing beyond the LoS range {DEFAULT_LOS_THRESHOLD} m leaves "
            "the BS without a reachable surface"
        )
    nodes = [{"id": 0, "kind": "BS", "pos": [0.0, 0.0, 0.0]}]
    for r in range(rows):
        for c in range(cols):
            nodes.append(
                {
                    "id": len(nodes),
                    "kind": "IRS",
                    "pos": [(c + 1) * spacing, r * spacing, 0.0],
                }
            )
    for k in range(users):
        nodes.append(
            {
                "id": len(nodes),
                "kind": "User",
                "pos": [(cols + 1) * spacing, k * spacing, 0.0],
            }
        )
    return dump_scene_document(nodes)


def _random_document(
    num_irs: int, num_users: int, side: float, min_sep: float, seed: int
) -> str:
    if num_irs < 1 or num_users < 0:
        raise CliError("random needs at least one surface and users >= 0")
    if side <= 0 or min_sep <= 0:
        raise CliError("random needs positive side and min_sep")
    # placement must satisfy the scene validator too, which enforces
    # its own far-field floor
    sep = max(min_sep, DEFAULT_MIN_FAR_FIELD)
    if sep >= DEFAULT_LOS_THRESHOLD:
        raise CliError("min_sep leaves no room inside the LoS range")
    rng = np.random.default_rng(seed)
    attempts = 0
    for _ in range(GENERATOR_RESTARTS):
        pts = [np.zeros(3)]
        ok = True
        for idx in range(num_irs + num_users):
            for _ in range(PLACEMENT_TRIES):
                attempts += 1
                if idx == 0:
                    # the first surface anchors the graph at the BS;
                    # its full 3-D distance must stay inside LoS range
                    thr = DEFAULT_LOS_THRESHOLD
                    z = rng.uniform(0, min(2.0, math.sqrt(thr**2 - sep**2)))
                    r = rng.uniform(sep, math.sqrt(thr**2 - z**2))
                    az = rng.uniform(0, 2 * math.pi)
                    cand = np.array([r * math.cos(az), r * math.sin(az), z])
                else:
                    cand = np.array(
                        [
                            rng.uniform(0, side),
                            rng.uniform(0, side),
                            rng.uniform(0, 2.0),
                        ]
                    )
                if all(np.linalg.norm(cand - p) >= sep for p in pts):
                    pts.append(cand)
                    break
            else:
                ok = False
                break
        if ok:
            nodes = [{"id": 0, "kind": "BS", "pos": [0.0, 0.0, 0.0]}]
            for j in range(num_irs):
                nodes.append(
                    {"id": j + 1, "kind": "IRS", "pos": [float(x) for x in pts[j + 1]]}
                )
            for k in range(num_users):
                nodes.append(
                    {
                        "id": num_irs + k + 1,
                        "kind": "User",
                        "pos": [float(x) for x in pts[num_irs + 1 + k]],
                    }
                )
            return dump_scene_document(nodes)
    raise CliError(
        f"random placement unsatisfiable after {attempts} attempts (seed {seed})"
    )


def generate_scene(spec: str, seed: int = 0) -> str:
    """Scene document from a generator spec, deterministic per seed.

    ``grid(rows, cols, spacing, users)`` lays surfaces on a lattice
    with the users one column beyond it; ``random(J, K, side, min_sep)``
    scatters J surfaces and K users over a side x side area.  The
    result always passes the scene validator.
    """
    m = _SPEC_RE.match(spec)
    if not m:
        raise CliError(f"malformed generator spec {spec!r}")
    name, body = m.groups()
    nums = _spec_numbers(body, spec)
    if len(nums) != 4:
        raise CliError(f"generator spec {spec!r} takes four arguments")
    if name == "grid":
        text = _grid_document(int(nums[0]), int(nums[1]), nums[2], int(nums[3]))
    else:
        text = _random_document(int(nums[0]), int(nums[1]), nums[2], nums[3], seed)
    load_scene(text)
    return text


# -- reports -----------------------------------------------------------

def _decibel(x: float) -> float:
    return 10.0 * math.log10(x)


def _load_config_scene(config: ExperimentConfig) -> Scene:
    if config.scene_path is not None:
        scene = load_scene_file(config.scene_path)
    else:
        scene = load_scene(generate_scene(config.generate, config.seed))
    if config.antennas is not None:
        scene = scene.with_antennas(config.antennas)
    if config.elements is not None:
        scene = scene.with_elements(config.elements)
    return scene


def _solve_record(scene: Scene, config: ExperimentConfig, paths: int) -> dict:
    solution = solve(scene, SolveParams(paths=paths, algorithm=config.algorithm))
    record: dict = {
        "params": {
            "algorithm": config.algorithm,
            "paths": paths,
            "antennas": scene.bs_antennas,
            "elements": scene.elements,
            "surfaces": scene.num_irs,
            "users": scene.num_users,
        },
        "feasible": solution.feasible,
        "objective": solution.objective,
        "objective_db": None if solution.objective is None else _decibel(solution.objective),
        "users": [
            {
                "user": route.user_index,
                "power": power,
                "power_db": _decibel(power),
                "hops": route.hops,
                "route": str(route),
                "vertices": list(route.vertices),
            }
            for route, power in zip(solution.routes, solution.powers)
        ],
        "cliques_explored": solution.diagnostics.get("cliques_explored"),
    }
    if config.timing:
        record["wall_time_s"] = solution.diagnostics.get("wall_time_s")
    return record


def run_experiment(config: ExperimentConfig) -> dict:
    """One solver invocation on the configured scene."""
    scene = _load_config_scene(config)
    return _solve_record(scene, config, config.paths)


def sweep(config: ExperimentConfig) -> dict:
    """One record per sweep value on a fixed scene.

    A failing point is recorded in its row and the series continues.
    """
    if config.sweep is None:
        raise CliError("sweep variable not set")
    scene = _load_config_scene(config)
    points = []
    for value in config.values:
        try:
            if config.sweep == "M":
                record = _solve_record(scene.with_elements(value), config, config.paths)
            else:
                record = _solve_record(scene, config, value)
            points.append({"value": value, **record})
        except (SceneError, SolverError, ValueError) as exc:
            points.append({"value": value, "error": str(exc)})
    return {"sweep": config.sweep, "users": scene.num_users, "points": points}


# -- formatting --------------------------------------------------------

def _fmt_db(x: float | None) -> str:
    return "-inf" if x is None else f"{x:.3f}"

def _run_table(record: dict) -> str:
    lines = [
        f"algorithm   {record['params']['algorithm']}",
        f"elements    {record['params']['elements']}",
        f"antennas    {record['params']['antennas']}",
        f"paths       {record['params']['paths']}",
        f"feasible    {'yes' if record['feasible'] else 'no'}",
        f"objective   {_fmt_db(record['objective_db'])} dB",
    ]
    for user in record["users"]:
        lines.append(
            f"user {user['user']:<4d}  {_fmt_db(user['power_db']):>10s} dB  {user['route']}"
        )
    if "wall_time_s" in record:
        lines.append(f"wall time   {record['wall_time_s']:.6f} s")
    return "\n".join(lines) + "\n"


def _series_csv_header(num_users: int) -> list[str]:
    cols = ["value", "objective_db", "feasible"]
    for k in range(1, num_users + 1):
        cols.append(f"power_db_u{k}")
    for k in range(1, num_users + 1):
        cols.append(f"hops_u{k}")
    cols.append("error")
    return cols


def _series_csv(series: dict, num_users: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_series_csv_header(num_users))
    for point in series["points"]:
        if "error" in point:
            row = [point["value"], "", ""] + [""] * (2 * num_users) + [point["error"]]
            writer.writerow(row)
            continue
        by_user = {u["user"]: u for u in point["users"]}
        row: list = [point["value"]]
        row.append("" if point["objective_db"] is None else repr(point["objective_db"]))
        row.append(int(point["feasible"]))
        for k in range(1, num_users + 1):
            u = by_user.get(k)
            row.append("" if u is None else repr(u["power_db"]))
        for k in range(1, num_users + 1):
            u = by_user.get(k)
            row.append("" if u is None else u["hops"])
        row.append("")
        writer.writerow(row)
    return buf.getvalue()


def _series_table(series: dict) -> str:
    lines = [f"sweep over {series['sweep']}"]
    lines.append(f"{'value':>8s} {'objective':>12s}  status")
    for point in series["points"]:
        if "error" in point:
            lines.append(f"{point['value']:>8d} {'-':>12s}  error: {point['error']}")
        elif not point["feasible"]:
            lines.append(f"{point['value']:>8d} {'-':>12s}  infeasible")
        else:
            lines.append(
                f"{point['value']:>8d} {point['objective_db']:>9.3f} dB  "
                + " ".join(f"u{u['user']}:{u['hops']}h" for u in point["users"])
            )
    return "\n".join(lines) + "\n"


def _render(result: dict, config: ExperimentConfig) -> str:
    if config.fmt == "json":
        return json.dumps(result, indent=2, sort_keys=True) + "\n"
    if config.sweep is not None:
        if config.fmt == "csv":
            return _series_csv(result, result["users"])
        return _series_table(result)
    if config.fmt == "csv":
        raise CliError("csv output needs a sweep; use table or json for single runs")
    return _run_table(result)


# -- entry point -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which this tool reserves for
    # infeasible outcomes
    def error(self, message):
        raise CliError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="beamroute", description="Multi-hop beam routing experiments.")
    p.add_argument("--scene", help="scene document path")
    p.add_argument("--generate", metavar="SPEC", help="grid(R,C,S,U) or random(J,K,side,min_sep)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--algorithm",
        choices=("proposed", "sequential", "min-pathloss", "max-cpb", "brute-force"),
        default="proposed",
    )
    p.add_argument("--paths", type=int, default=20, help="candidate routes per user")
    p.add_argument("--elements", type=int, help="override per-surface element count")
    p.add_argument("--antennas", type=int, help="override BS antenna count")
    p.add_argument("--sweep", choices=SWEEP_VARIABLES)
    p.add_argument("--values", help="sweep values: comma list or A..B range")
    p.add_argument("--output", choices=FORMATS, default="table", dest="fmt")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="include wall time in reports")
    return p


def _parse_values(text: str | None) -> tuple[int, ...]:
    if text is None:
        return ()
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        try:
            if ".." in token:
                lo, hi = token.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(token))
        except ValueError:
            raise CliError(f"bad sweep value {token!r}") from None
    return tuple(out)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        scene_path=args.scene,
        generate=args.generate,
        seed=args.seed,
        algorithm=args.algorithm.replace("-", "_"),
        paths=args.paths,
        elements=args.elements,
        antennas=args.antennas,
        sweep=args.sweep,
        values=_parse_values(args.values),
        fmt=args.fmt,
        out=args.out,
        timing=args.timing,
    )


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        config = _config_from_args(parser.parse_args(argv))
        if config.sweep is not None:
            result = sweep(config)
            _emit(_render(result, config), config.out)
            ok = all("error" not in p and p["feasible"] for p in result["points"])
            return 0 if ok else 2
        result = run_experiment(config)
        _emit(_render(result, config), config.out)
        return 0 if result["feasible"] else 2
    except (CliError, SceneError, SolverError, OSError, ValueError) as exc:
        sys.stdout.write(json.dumps({"error": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
