"""Command-line front end.

One executable, one mode per run (the subcommand), flat key = value
configs, CSV out.  The CSV layout is the stable contract: one row per
recorded step and fragment size, 12 significant digits, reruns are
byte-identical.  Figures are an optional extra written next to the CSV.

Exit codes: 0 success, 1 config error, 2 simulation invariant violation,
3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .collision import CollisionConfig, run_collision_sim
from .lindblad import LindbladConfig, integrate, integrate_nonmarkov
from .metrics import MIProfile
from .qcore import InvariantViolation

MODES = ("collision", "lindblad", "nonmarkov", "sweep")

CSV_HEADER = "t,k,f,mi_bits,mi_rescaled,entropy_s_bits,coherence_s,coherence_a1"


class ConfigError(ValueError):
    """Bad or inconsistent run configuration."""


# key -> (type tag, which engine family may use it)
_KEYS = {
    "mode": ("mode", "shared"),
    "n_accessible": ("int", "both"),
    "j_sa_tau1": ("float", "collision"),
    "j_se_tau2": ("float", "collision"),
    "beta": ("float", "collision"),
    "interaction": ("str", "collision"),
    "steps": ("int", "collision"),
    "include_free_evolution": ("bool", "collision"),
    "record_every": ("int", "shared"),
    "jz": ("float", "lindblad"),
    "gamma": ("float", "lindblad"),
    "nbar": ("float", "lindblad"),
    "calj": ("float", "lindblad"),
    "t_max": ("float", "lindblad"),
    "dt": ("float", "lindblad"),
    "bath": ("str", "lindblad"),
    "sweep_key": ("str", "shared"),
    "sweep_values": ("floats", "shared"),
    "output": ("str", "shared"),
}

# config key -> dataclass field
_FIELD_OF = {"jz": "j_z"}


@dataclass(frozen=True)
class RunSpec:
    """Everything one invocation needs: engine config plus output plan."""

    mode: str
    config: CollisionConfig | LindbladConfig
    record_every: int = 1
    output: str | None = None
    sweep_key: str | None = None
    sweep_values: tuple[float, ...] | None = None
    make_figure: bool = False

    @property
    def engine(self) -> str:
        """collision / lindblad / nonmarkov, regardless of sweep wrapping."""
        if isinstance(self.config, CollisionConfig):
            return "collision"
        if self.config.bath == "nonmarkov-dephasing":
            return "nonmarkov"
        return "lindblad"


def _parse_scalar(key: str, raw: str, kind: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "false"):
                return raw.lower() == "true"
            raise ValueError
        if kind == "floats":
            vals = [float(p) for p in raw.split(",") if p.strip()]
            if not vals:
                raise ValueError
            if len(set(vals)) != len(vals):
                raise ConfigError(f"sweep_values contains duplicates: {raw!r}")
            return tuple(vals)
        return raw
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None


def _read_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno} is not 'key = value': {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown config key: {key!r}")
        if key in pairs:
            raise ConfigError(f"duplicate config key: {key!r}")
        pairs[key] = value
    return pairs


def _infer_sweep_engine(pairs: dict[str, str]) -> str:
    collision_keys = {k for k, (_, fam) in _KEYS.items() if fam == "collision"}
    lindblad_keys = {k for k, (_, fam) in _KEYS.items() if fam == "lindblad"}
    has_c = bool(collision_keys & pairs.keys())
    has_l = bool(lindblad_keys & pairs.keys())
    if has_c and has_l:
        raise ConfigError("sweep mixes collision and lindblad keys")
    if has_c:
        return "collision"
    if has_l:
        return "nonmarkov" if pairs.get("bath") == "nonmarkov-dephasing" else "lindblad"
    raise ConfigError(
        "sweep cannot infer the engine: set interaction= (collision) or bath= (lindblad)"
    )


def _build_config(engine: str, values: dict[str, object]) -> CollisionConfig | LindbladConfig:
    try:
        if engine == "collision":
            return CollisionConfig(**values)
        if engine == "nonmarkov":
            values.setdefault("bath", "nonmarkov-dephasing")
            values.setdefault("n_accessible", 3)
            values.setdefault("t_max", 4.0)
            if values["bath"] != "nonmarkov-dephasing":
                raise ConfigError(
                    f"mode nonmarkov requires bath = nonmarkov-dephasing, got {values['bath']!r}"
                )
            return LindbladConfig(**values)
        if values.get("bath") == "nonmarkov-dephasing":
            raise ConfigError("bath nonmarkov-dephasing needs mode = nonmarkov")
        return LindbladConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, default_mode: str | None = None) -> RunSpec:
    """Parse a flat key = value document into a RunSpec.

    Blank lines and '#' comments are ignored.  Unknown keys, duplicate
    keys, values of the wrong type and keys that do not belong to the
    requested mode are all rejected by name.
    """
    pairs = _read_pairs(text)
    mode = pairs.pop("mode", None)
    if mode is not None and mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if mode is None:
        mode = default_mode
    elif default_mode is not None and mode != default_mode:
        raise ConfigError(f"config says mode = {mode}, command line says {default_mode}")
    if mode is None:
        raise ConfigError("mode is required")

    engine = _infer_sweep_engine(pairs) if mode == "sweep" else mode
    family = "collision" if engine == "collision" else "lindblad"

    parsed: dict[str, object] = {}
    for key, raw in pairs.items():
        kind, owner = _KEYS[key]
        if owner not in ("shared", "both", family):
            raise ConfigError(f"key {key!r} is not valid for mode {mode!r}")
        parsed[key] = _parse_scalar(key, raw, kind)

    record_every = parsed.pop("record_every", 1)
    if not isinstance(record_every, int) or record_every < 1:
        raise ConfigError(f"record_every must be a positive integer, got {record_every}")
    output = parsed.pop("output", None)
    sweep_key = parsed.pop("sweep_key", None)
    sweep_values = parsed.pop("sweep_values", None)

    if mode == "sweep":
        if sweep_key is None or sweep_values is None:
            raise ConfigError("mode sweep requires sweep_key and sweep_values")
    elif sweep_key is not None or sweep_values is not None:
        raise ConfigError("sweep_key/sweep_values are only valid with mode = sweep")

    engine_values = {_FIELD_OF.get(k, k): v for k, v in parsed.items()}
    config = _build_config(engine, engine_values)

    if sweep_key is not None:
        sweep_values = _check_sweep_axis(config, sweep_key, sweep_values)

    return RunSpec(
        mode=mode,
        config=config,
        record_every=record_every,
        output=output,
        sweep_key=sweep_key,
        sweep_values=sweep_values,
    )


def _check_sweep_axis(config, sweep_key: str, values: tuple[float, ...]) -> tuple[float, ...]:
    if sweep_key not in _KEYS or _KEYS[sweep_key][0] not in ("int", "float"):
        raise ConfigError(f"sweep_key must name a numeric config key, got {sweep_key!r}")
    field = _FIELD_OF.get(sweep_key, sweep_key)
    if field not in {f.name for f in dataclasses.fields(config)}:
        raise ConfigError(f"sweep_key {sweep_key!r} does not apply to this engine")
    if _KEYS[sweep_key][0] == "int":
        if any(not float(v).is_integer() for v in values):
            raise ConfigError(f"sweep_key {sweep_key!r} needs integer values")
        values = tuple(int(v) for v in values)
    # Fail fast on values the engine would reject mid-sweep.
    for v in values:
        try:
            dataclasses.replace(config, **{field: v})
        except ValueError as exc:
            raise ConfigError(f"sweep value {v!r} rejected: {exc}") from None
    return values


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def csv_lines(profiles: Iterable[MIProfile]) -> list[str]:
    lines = [CSV_HEADER]
    for p in profiles:
        for i, k in enumerate(p.ks):
            lines.append(
                ",".join(
                    (
                        _fmt(p.step_or_time),
                        str(k),
                        _fmt(p.fractions[i]),
                        _fmt(p.mi_bits[i]),
                        _fmt(p.mi_rescaled[i]),
                        _fmt(p.entropy_s_bits),
                        _fmt(p.coherence_s),
                        _fmt(p.coherence_a1),
                    )
                )
            )
    return lines


def write_csv(profiles: Sequence[MIProfile], path: Path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(csv_lines(profiles)))
        fh.write("\n")


def _compute_profiles(engine: str, config, record_every: int) -> list[MIProfile]:
    if engine == "collision":
        return run_collision_sim(config, record_every=record_every)
    if engine == "nonmarkov":
        return [r.profile for r in integrate_nonmarkov(config, record_every=record_every)]
    return [r.profile for r in integrate(config, record_every=record_every)]


def _render_figure(engine: str, profiles: Sequence[MIProfile], csv_path: Path) -> Path:
    from .plots import render_profile_figure

    fig_path = csv_path.with_suffix(".png")
    x_label = "collision" if engine == "collision" else "time"
    render_profile_figure(profiles, fig_path, x_label=x_label, title=csv_path.stem)
    return fig_path


def run(spec: RunSpec) -> list[Path]:
    """Execute one RunSpec and return every file written."""
    base = Path(spec.output) if spec.output else Path(f"{spec.engine}.csv")
    if spec.sweep_key is None:
        jobs = [(spec.config, base)]
    else:
        field = _FIELD_OF.get(spec.sweep_key, spec.sweep_key)
        jobs = []
        for value in spec.sweep_values:
            cfg = dataclasses.replace(spec.config, **{field: value})
            path = base.with_name(f"{base.stem}_{spec.sweep_key}{_fmt(value)}{base.suffix}")
            jobs.append((cfg, path))

    def compute(job):
        config, path = job
        profiles = _compute_profiles(spec.engine, config, spec.record_every)
        write_csv(profiles, path)
        return path, profiles

    if len(jobs) == 1:
        results = [compute(jobs[0])]
    else:
        with ThreadPoolExecutor(max_workers=min(4, len(jobs))) as pool:
            results = list(pool.map(compute, jobs))

    written: list[Path] = []
    for path, profiles in results:
        written.append(path)
        # Figure rendering stays on the main thread; the Agg canvas is
        # not safe to drive from the pool workers.
        if spec.make_figure:
            written.append(_render_figure(spec.engine, profiles, path))
    return written


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdarwin",
        description="Redundancy-profile simulations of a system watched by a small register",
    )
    parser.add_argument(
        "--check",
        action="store_true",
        help="run the built-in property suite and exit (nonzero on failure)",
    )
    sub = parser.add_subparsers(dest="mode")
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run in {mode} mode")
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--output", type=Path, help="CSV destination (overrides config)")
        p.add_argument(
            "--plot",
            action="store_true",
            help="also render a figure next to each CSV",
        )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    if args.check:
        from .selfcheck import run_property_suite

        checks, failures = run_property_suite()
        for line in failures:
            print(f"FAIL  {line}", file=sys.stderr)
        print(f"{checks - len(failures)}/{checks} property checks passed")
        return 0 if not failures else 2

    if args.mode is None:
        print("error: give a mode subcommand or --check", file=sys.stderr)
        return 1

    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    try:
        spec = parse_config(text, default_mode=args.mode)
        if args.output is not None:
            spec = dataclasses.replace(spec, output=str(args.output))
        if args.plot:
            spec = dataclasses.replace(spec, make_figure=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        written = run(spec)
    except (InvariantViolation,) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3

    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
