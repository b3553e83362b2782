"""Batch command-line surface.

``sit2stand simulate``  - run paired (or single) cane episodes from a
scenario file and write logs, GRF traces, loads, parameters and a render.
``sit2stand analyze``   - events, the ten parameters and trial statistics
from measured force-plate CSVs; with a skeleton record file, also the
model-vs-measured ankle-moment comparison.
``sit2stand compare``   - side-by-side parameter table of two runs.

Every command writes only into its --out directory, plus a manifest
(resolved config, input/output content hashes). Outputs are deterministic:
rerunning with identical inputs reproduces the bytes.

Exit codes: 0 success, 1 runtime failure, 2 validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, anthro
from ._config import ConfigError
from .control_sim import EpisodeLog, Scenario, run_episode
from .dynamics import inverse_dynamics, loads_to_csv
from .grf_analysis import (
    GrfProfile,
    IncompleteMovementError,
    PARAM_NAMES,
    detect_events,
    extract_parameters,
    parse_stats_csv,
    stats_to_csv,
    trial_statistics,
)
from .perception import (
    fit_sagittal_plane,
    project_and_angles,
    read_skeleton_file,
    smooth_and_resample,
)

CONFIG_ENV = "SIT2STAND_CONFIG"


class ValidationError(ValueError):
    """User-input problem: exits with status 2."""


def reference_scenario_path() -> Path:
    """Bundled reference scenario (mean elderly male, 40 cm chair)."""
    return Path(resources.files("sit2stand").joinpath("data/reference_scenario.cfg"))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(out_dir: Path, name: str, text: str, outputs: dict) -> None:
    data = text.encode("utf-8")
    (out_dir / name).write_bytes(data)
    outputs[name] = _sha256(data)


def _write_manifest(out_dir, command, config, inputs, outputs) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": {str(p): _sha256(Path(p).read_bytes()) for p in inputs},
        "outputs": outputs,
    }
    text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    (out_dir / "manifest.json").write_bytes(text.encode("utf-8"))


def _render_grf(path: Path, profiles: dict[str, GrfProfile], outputs: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    styles = {"control": "k-", "assisted": "r--"}
    bw = None
    for label, prof in profiles.items():
        ax.plot(prof.t, prof.fz, styles.get(label, "-"), label=f"feet ({label})")
        if prof.cane_fz is not None and np.any(prof.cane_fz > 0):
            ax.plot(prof.t, prof.cane_fz, "b:", label=f"cane ({label})")
        bw = prof.body_weight
    if bw is not None:
        ax.axhline(bw, color="0.6", lw=0.8, label="body weight")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("vertical force (N)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    outputs[path.name] = _sha256(path.read_bytes())


def _load_table(args) -> anthro.AnthroTable | None:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if not path:
        return None
    try:
        return anthro.load_table(path)
    except (OSError, ConfigError, ValueError) as exc:
        raise ValidationError(f"anthropometric table {path}: {exc}") from exc


# -- simulate -----------------------------------------------------------------


def _episode_outputs(tag: str, log: EpisodeLog, out_dir: Path, outputs: dict):
    _write(out_dir, f"episode_{tag}.csv", log.to_csv(), outputs)
    _write(out_dir, f"loads_{tag}.csv", loads_to_csv(log.frames), outputs)
    prof = log.grf_profile()
    _write(out_dir, f"grf_{tag}.csv", prof.to_csv(), outputs)
    events = detect_events(prof)
    params = extract_parameters(prof, events)
    stats = trial_statistics([params])
    _write(out_dir, f"parameters_{tag}.csv", stats_to_csv(stats, prof.body_weight), outputs)
    return prof, params


def cmd_simulate(args) -> int:
    scenario_path = Path(args.scenario) if args.scenario else reference_scenario_path()
    if not scenario_path.exists():
        raise ValidationError(f"scenario file not found: {scenario_path}")
    try:
        scenario = Scenario.from_file(scenario_path)
    except (ConfigError, ValueError) as exc:
        raise ValidationError(f"scenario {scenario_path}: {exc}") from exc

    table = _load_table(args)
    model = anthro.scale_anthropometrics(scenario.subject, table)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}

    try:
        control = run_episode(scenario, assist=False, model=model)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    prof_c, params_c = _episode_outputs("control", control, out_dir, outputs)
    profiles = {"control": prof_c}

    if scenario.assist:
        assisted = run_episode(scenario, assist=True, model=model)
        prof_a, params_a = _episode_outputs("assisted", assisted, out_dir, outputs)
        profiles["assisted"] = prof_a
        _write(
            out_dir,
            "parameters_compare.csv",
            _compare_text(params_a.as_dict(), params_c.as_dict(), prof_a.body_weight),
            outputs,
        )

    _render_grf(out_dir / "grf.png", profiles, outputs)
    _write_manifest(
        out_dir,
        "simulate",
        {"scenario": scenario.to_text(), "assist": scenario.assist},
        [scenario_path],
        outputs,
    )
    return 0


# -- analyze ------------------------------------------------------------------


def cmd_analyze(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, str] = {}
    inputs = list(args.grf)

    all_params = []
    events_rows = ["trial,t_start,t_liftoff,t_peak,t_end"]
    profiles = {}
    body_weight = args.body_weight
    for path in args.grf:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc}") from exc
        try:
            prof = GrfProfile.from_csv(text, body_weight=body_weight)
            rate = 1.0 / float(np.median(np.diff(prof.t)))
            if rate < 100.0 - 1e-6:
                raise ValueError(f"sample rate {rate:.1f} Hz below the 100 Hz minimum")
            events = detect_events(prof)
            params = extract_parameters(prof, events)
        except (ValueError, IncompleteMovementError) as exc:
            raise ValidationError(f"{path}: {exc}") from exc
        body_weight = prof.body_weight  # keep trials on a common weight
        all_params.append(params)
        name = Path(path).name
        events_rows.append(
            f"{name},{events.t_start!r},{events.t_liftoff!r},"
            f"{events.t_peak!r},{events.t_end!r}"
        )
        if not profiles:
            profiles["control"] = prof

    stats = trial_statistics(all_params)
    _write(out_dir, "parameters.csv", stats_to_csv(stats, body_weight), outputs)
    _write(out_dir, "events.csv", "\n".join(events_rows) + "\n", outputs)

    summary = {"n_trials": stats.n, "body_weight": body_weight}
    if args.skeleton:
        inputs.append(args.skeleton)
        mc_text, mc_rms = _ankle_moment_comparison(args, profiles["control"])
        _write(out_dir, "mc_compare.csv", mc_text, outputs)
        summary["mc_rms"] = mc_rms
        print(f"model-vs-measured ankle moment RMS: {mc_rms:.3f} N m")
    _write(
        out_dir,
        "summary.csv",
        "key,value\n" + "\n".join(f"{k},{v!r}" for k, v in summary.items()) + "\n",
        outputs,
    )

    _render_grf(out_dir / "grf.png", profiles, outputs)
    _write_manifest(
        out_dir,
        "analyze",
        {"grf": [str(p) for p in args.grf], "skeleton": args.skeleton,
         "body_weight": body_weight},
        inputs,
        outputs,
    )
    return 0


def _ankle_moment_comparison(args, prof: GrfProfile) -> tuple[str, float]:
    """Model ankle moment from the skeleton stream vs the moment implied by
    the measured vertical force at the model's balance pressure centre."""
    subject = anthro.Subject(args.subject_height, args.subject_mass)
    model = anthro.scale_anthropometrics(subject, _load_table(args))
    try:
        frames = read_skeleton_file(args.skeleton)
        if len(frames) >= 2:
            ts = np.array([f.t for f in frames])
            rate = 1.0 / float(np.median(np.diff(ts)))
            if rate < 30.0 - 1e-6:
                raise ValueError(f"frame rate {rate:.1f} Hz below the 30 Hz minimum")
        plane = fit_sagittal_plane(frames)
        sagittal = [project_and_angles(f, plane) for f in frames]
        traj = smooth_and_resample(sagittal, rate=max(100.0, args.skeleton_rate))
        dyn = inverse_dynamics(traj, None, model, cop_x="balance")
    except ValueError as exc:
        raise ValidationError(f"skeleton {args.skeleton}: {exc}") from exc

    rows = ["t,mc_model,mc_measured"]
    diffs = []
    for fr in dyn:
        fz_meas = float(np.interp(fr.t, prof.t - prof.t[0], prof.fz))
        lever = float(fr.loads.cop_x - fr.pose.ankle[0])
        mc_meas = lever * fz_meas
        rows.append(f"{float(fr.t)!r},{float(fr.loads.m_ankle_grf)!r},{mc_meas!r}")
        diffs.append(fr.loads.m_ankle_grf - mc_meas)
    rms = float(np.sqrt(np.mean(np.square(diffs)))) if diffs else float("nan")
    return "\n".join(rows) + "\n", rms


# -- compare ------------------------------------------------------------------


def _compare_text(mean_a, mean_b, body_weight: float | None) -> str:
    rows = ["param,a,b,delta,delta_pct_bw"]
    for name in PARAM_NAMES:
        a, b = mean_a[name], mean_b[name]
        delta = a - b
        force_scaled = body_weight and not name.startswith("T")
        pct = repr(100.0 * delta / body_weight) if force_scaled else ""
        rows.append(f"{name},{a!r},{b!r},{delta!r},{pct}")
    return "\n".join(rows) + "\n"


def _find_parameters_file(run_dir: Path) -> Path:
    for name in ("parameters.csv", "parameters_assisted.csv", "parameters_control.csv"):
        candidate = run_dir / name
        if candidate.exists():
            return candidate
    raise ValidationError(f"no parameter file found in {run_dir}")


def cmd_compare(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path_a = _find_parameters_file(Path(args.run_a))
    path_b = _find_parameters_file(Path(args.run_b))
    try:
        mean_a, _ = parse_stats_csv(path_a.read_text(encoding="utf-8"))
        mean_b, _ = parse_stats_csv(path_b.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    outputs: dict[str, str] = {}
    _write(out_dir, "compare.csv", _compare_text(mean_a, mean_b, None), outputs)
    _write_manifest(
        out_dir,
        "compare",
        {"run_a": str(args.run_a), "run_b": str(args.run_b)},
        [path_a, path_b],
        outputs,
    )
    return 0


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sit2stand",
        description="Sit-to-stand cane-assistance simulation and GRF analysis",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run paired cane episodes from a scenario")
    p_sim.add_argument("--scenario", help="scenario file (default: bundled reference)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--config", help=f"anthropometric override file (or ${CONFIG_ENV})")
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="extract events and parameters from GRF CSVs")
    p_an.add_argument("--grf", nargs="+", required=True, help="force-plate CSV file(s)")
    p_an.add_argument("--skeleton", help="skeleton record file for the moment comparison")
    p_an.add_argument("--body-weight", type=float, default=None,
                      help="body weight in N (default: estimated from the settle)")
    p_an.add_argument("--subject-height", type=float, default=1.734)
    p_an.add_argument("--subject-mass", type=float, default=88.3)
    p_an.add_argument("--skeleton-rate", type=float, default=100.0)
    p_an.add_argument("--config", help=f"anthropometric override file (or ${CONFIG_ENV})")
    p_an.add_argument("--out", required=True, help="output directory")
    p_an.set_defaults(func=cmd_analyze)

    p_cmp = sub.add_parser("compare", help="side-by-side parameter table of two runs")
    p_cmp.add_argument("--run-a", required=True, help="first run directory")
    p_cmp.add_argument("--run-b", required=True, help="second run directory")
    p_cmp.add_argument("--out", required=True, help="output directory")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
