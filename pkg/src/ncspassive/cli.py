"""Command-line front end: analyze, synthesize, simulate, report.

Scenario configs and run reports are JSON (schema in config_schema.json,
shipped with the package); matrices are nested row arrays of numbers at
full round-trip precision so certificates stay auditable. Exit codes:
0 certified / success, 1 input error, 2 indeterminate, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, analysis, lmi, sim, synthesis
from .errors import AssumptionViolated, ConfigError, NcsPassiveError
from .model import (
    Gain,
    LossModel,
    Plant,
    Schedule,
    closed_loop,
    full_packet_schedule,
    mode_distribution,
)
from .numerics import DefinitenessMargin

__all__ = ["main", "load_config", "ScenarioConfig", "EXIT_OK", "EXIT_INPUT", "EXIT_INDETERMINATE", "EXIT_VERIFY"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INDETERMINATE = 2
EXIT_VERIFY = 3

_TOP_KEYS = {"plant", "schedule", "loss", "eta", "gain", "solver", "simulation"}
_PLANT_KEYS = {"A", "B1", "B2", "C1", "D11", "D12"}
_SOLVER_KEYS = {"margin", "budget", "restarts", "seed"}
_SIM_KEYS = {"signal", "horizon", "trials", "seed", "x0", "terminal_threshold"}
_SIGNAL_KEYS = {"kind", "sigma", "amplitude", "period", "magnitude", "step"}


@dataclass
class SolverSettings:
    margin: float = 1e-8
    budget: int = 300
    restarts: int = 8
    seed: int = 0

    def options(self) -> lmi.SolveOptions:
        return lmi.SolveOptions(
            max_iters=self.budget,
            restarts=self.restarts,
            seed=self.seed,
            margin=DefinitenessMargin(self.margin),
        )


@dataclass
class SimSettings:
    signal: dict
    horizon: int = 200
    trials: int = 100
    seed: int = 1234
    x0: list | None = None
    terminal_threshold: float = 1e-3

    def input_signal(self, m1: int) -> sim.InputSignal:
        spec = dict(self.signal)
        kind = spec.pop("kind")
        return sim.InputSignal(kind=kind, dimension=m1, **spec)


@dataclass
class ScenarioConfig:
    plant: Plant
    schedule: Schedule
    loss: LossModel
    eta: float | str | None
    gain: Gain | None
    solver: SolverSettings
    simulation: SimSettings
    raw: dict


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {unknown}")


def _matrix(value, where: str) -> list:
    if not (
        isinstance(value, list)
        and value
        and all(isinstance(r, list) and r and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r) for r in value)
    ):
        raise ConfigError(f"{where}: expected a non-empty nested array of numbers")
    width = len(value[0])
    if any(len(r) != width for r in value):
        raise ConfigError(f"{where}: rows have inconsistent lengths")
    return value


def parse_config(data: dict, where: str = "config") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: top level must be an object")
    _reject_unknown(data, _TOP_KEYS, where)

    plant_spec = data.get("plant")
    if not isinstance(plant_spec, dict):
        raise ConfigError(f"{where}.plant: required object missing")
    _reject_unknown(plant_spec, _PLANT_KEYS, f"{where}.plant")
    missing = sorted(_PLANT_KEYS - set(plant_spec))
    if missing:
        raise ConfigError(f"{where}.plant: missing field(s) {missing}")
    try:
        plant = Plant(**{k: _matrix(plant_spec[k], f"{where}.plant.{k}") for k in _PLANT_KEYS})
    except NcsPassiveError as exc:
        raise ConfigError(f"{where}.plant: {exc}") from exc

    sched_spec = data.get("schedule", "full-packet")
    if sched_spec == "full-packet":
        schedule = full_packet_schedule()
    elif isinstance(sched_spec, dict):
        _reject_unknown(sched_spec, {"period", "s1", "s2"}, f"{where}.schedule")
        try:
            schedule = Schedule(
                period=int(sched_spec.get("period", 0)),
                s1=tuple(sched_spec.get("s1", ())),
                s2=tuple(sched_spec.get("s2", ())),
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where}.schedule: {exc}") from exc
    else:
        raise ConfigError(f'{where}.schedule: expected "full-packet" or an object')

    loss_spec = data.get("loss")
    if not isinstance(loss_spec, dict):
        raise ConfigError(f"{where}.loss: required object missing")
    _reject_unknown(loss_spec, {"alpha1", "alpha2"}, f"{where}.loss")
    try:
        loss = LossModel(float(loss_spec.get("alpha1", -1)), float(loss_spec.get("alpha2", -1)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}.loss: {exc}") from exc

    eta = data.get("eta")
    if eta is not None and eta != "maximize":
        if not isinstance(eta, (int, float)) or isinstance(eta, bool) or eta < 0:
            raise ConfigError(f'{where}.eta: expected a number >= 0 or "maximize"')
        eta = float(eta)

    gain = None
    if "gain" in data:
        gain = Gain(_matrix(data["gain"], f"{where}.gain"))
        if gain.K.shape != (plant.m2, plant.n):
            raise ConfigError(
                f"{where}.gain: must be {plant.m2}x{plant.n}, got {gain.K.shape[0]}x{gain.K.shape[1]}"
            )

    solver_spec = data.get("solver", {})
    if not isinstance(solver_spec, dict):
        raise ConfigError(f"{where}.solver: expected an object")
    _reject_unknown(solver_spec, _SOLVER_KEYS, f"{where}.solver")
    try:
        solver = SolverSettings(
            margin=float(solver_spec.get("margin", 1e-8)),
            budget=int(solver_spec.get("budget", 300)),
            restarts=int(solver_spec.get("restarts", 8)),
            seed=int(solver_spec.get("seed", 0)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}.solver: {exc}") from exc

    sim_spec = data.get("simulation", {})
    if not isinstance(sim_spec, dict):
        raise ConfigError(f"{where}.simulation: expected an object")
    _reject_unknown(sim_spec, _SIM_KEYS, f"{where}.simulation")
    signal_spec = sim_spec.get("signal", {"kind": "white-noise", "sigma": 1.0})
    if not isinstance(signal_spec, dict) or "kind" not in signal_spec:
        raise ConfigError(f'{where}.simulation.signal: expected an object with "kind"')
    _reject_unknown(signal_spec, _SIGNAL_KEYS, f"{where}.simulation.signal")
    try:
        simulation = SimSettings(
            signal=dict(signal_spec),
            horizon=int(sim_spec.get("horizon", 200)),
            trials=int(sim_spec.get("trials", 100)),
            seed=int(sim_spec.get("seed", 1234)),
            x0=sim_spec.get("x0"),
            terminal_threshold=float(sim_spec.get("terminal_threshold", 1e-3)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}.simulation: {exc}") from exc

    return ScenarioConfig(
        plant=plant,
        schedule=schedule,
        loss=loss,
        eta=eta,
        gain=gain,
        solver=solver,
        simulation=simulation,
        raw=data,
    )


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario config file; unknown fields are rejected."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(data, where=str(path))


# ---------------------------------------------------------------------------
# report helpers


def _digest(data: dict) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
    return "sha256:" + hashlib.sha256(canonical).hexdigest()


def _mat(m) -> list:
    return np.asarray(m, dtype=float).tolist()


def _verify_report_dict(report: lmi.VerifyReport) -> dict:
    return {
        "margin_epsilon_rel": report.margin.epsilon_rel,
        "constraints": [
            {"name": c.name, "lambda_max": c.lambda_max, "threshold": c.threshold}
            for c in report.checks
        ],
    }


def _write_report(out_path, command: str, config: ScenarioConfig, results: dict, started: float) -> dict:
    report = {
        "tool": {"name": "ncspassive", "version": __version__},
        "command": command,
        "config": config.raw,
        "config_digest": _digest(config.raw),
        "results": results,
        "results_digest": _digest(results),
        "timing": {"seconds": time.time() - started},
    }
    out_path = Path(out_path)
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(config_path, out_path) -> int:
    started = time.time()
    config = load_config(config_path)
    gain = config.gain or Gain.zero(config.plant.m2, config.plant.n)
    dist = mode_distribution(config.loss)
    opts = config.solver.options()
    margin = DefinitenessMargin(config.solver.margin)

    results: dict = {"gain": _mat(gain.K)}
    certified = True

    families = [
        closed_loop(config.plant, gain, k, config.schedule)
        for k in range(config.schedule.period)
    ]
    sms = analysis.sms_oracle(families, dist)
    results["sms"] = {"rho": sms.rho, "stable": sms.stable, "borderline": sms.borderline}

    stab = analysis.stability_lmi(config.plant, gain, config.schedule, dist, margin, opts)
    if stab.feasible:
        results["stability"] = {
            "status": "certified",
            "P": [_mat(p) for p in stab.ps],
            "verify": _verify_report_dict(stab.report),
        }
    else:
        certified = False
        results["stability"] = {
            "status": "indeterminate",
            "best_value": stab.best_value,
            "iterations": stab.iterations,
        }

    if config.eta is not None:
        if not config.schedule.full_packet:
            raise ConfigError("passivity analysis requires the full-packet schedule")
        if config.eta == "maximize":
            got = analysis.max_dissipation(config.plant, gain, dist, margin=margin, options=opts)
            if isinstance(got, float):
                eta_val = got
                pas = analysis.passivity_lmi(config.plant, gain, dist, eta_val, margin, opts)
            else:
                pas = got
                eta_val = None
        else:
            eta_val = float(config.eta)
            pas = analysis.passivity_lmi(config.plant, gain, dist, eta_val, margin, opts)
        if pas.feasible:
            results["passivity"] = {
                "status": "certified",
                "eta": eta_val,
                "P": _mat(pas.p),
                "rho": pas.rho,
                "verify": _verify_report_dict(pas.report),
            }
        else:
            certified = False
            results["passivity"] = {
                "status": "indeterminate",
                "eta": eta_val,
                "best_value": pas.best_value,
                "iterations": pas.iterations,
            }

    _write_report(out_path, "analyze", config, results, started)
    return EXIT_OK if certified else EXIT_INDETERMINATE


def cmd_synthesize(config_path, out_path) -> int:
    started = time.time()
    config = load_config(config_path)
    if not config.schedule.full_packet:
        raise ConfigError("synthesis requires full-packet: set schedule to \"full-packet\"")
    eta = config.eta if config.eta is not None else 0.0
    opts = config.solver.options()
    margin = DefinitenessMargin(config.solver.margin)

    result = synthesis.synthesize(config.plant, config.loss, eta, margin, opts)
    if not result.feasible:
        results = {
            "synthesis": {
                "status": "indeterminate",
                "eta": None if eta == "maximize" else float(eta),
                "best_value": result.best_value,
                "iterations": result.iterations,
            }
        }
        _write_report(out_path, "synthesize", config, results, started)
        return EXIT_INDETERMINATE

    results = {
        "synthesis": {
            "status": "certified",
            "eta": result.eta,
            "K": _mat(result.gain.K),
            "X": _mat(result.x),
            "Y": _mat(result.y),
            "rho": result.rho,
            "verify": _verify_report_dict(result.certificate.report),
            "round_trip": {
                "passivity_certified": result.verification.passivity_certified,
                "rho_ok": result.verification.rho_ok,
                "congruence_rel_err": result.verification.congruence_rel_err,
                "verdicts_match": result.verification.verdicts_match,
            },
        }
    }
    _write_report(out_path, "synthesize", config, results, started)
    return EXIT_OK


def _gain_from_spec(spec: str, plant: Plant) -> Gain:
    """--gain accepts a report path, a JSON matrix literal, or a matrix file."""
    try:
        data = json.loads(spec)
    except json.JSONDecodeError:
        try:
            data = json.loads(Path(spec).read_text())
        except OSError as exc:
            raise ConfigError(f"--gain: cannot read {spec!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--gain: {spec}:{exc.lineno}: {exc.msg}") from exc
    if isinstance(data, dict):
        k = data.get("results", {}).get("synthesis", {}).get("K")
        if k is None:
            raise ConfigError(f"--gain: report {spec!r} carries no synthesized K")
        data = k
    gain = Gain(_matrix(data, "--gain"))
    if gain.K.shape != (plant.m2, plant.n):
        raise ConfigError(
            f"--gain: must be {plant.m2}x{plant.n}, got {gain.K.shape[0]}x{gain.K.shape[1]}"
        )
    return gain


def cmd_simulate(config_path, out_path, gain_spec: str | None, dump_traces: bool) -> int:
    started = time.time()
    config = load_config(config_path)
    if gain_spec is not None:
        gain = _gain_from_spec(gain_spec, config.plant)
    elif config.gain is not None:
        gain = config.gain
    else:
        raise ConfigError("simulate needs a gain: set config.gain or pass --gain")

    s = config.simulation
    signal = s.input_signal(config.plant.m1)
    eta = config.eta if isinstance(config.eta, float) else 0.0
    stats = sim.ensemble(
        config.plant,
        gain,
        config.schedule,
        config.loss,
        signal,
        s.horizon,
        s.trials,
        s.seed,
        x0=s.x0,
        eta=eta,
        terminal_threshold=s.terminal_threshold,
    )
    results = {
        "gain": _mat(gain.K),
        "ensemble": {
            "trials": stats.trials,
            "horizon": stats.horizon,
            "base_seed": stats.base_seed,
            "eta": stats.eta,
            "dissipation_mean": stats.dissipation_mean,
            "dissipation_se": stats.dissipation_se,
            "terminal_fraction": stats.terminal_fraction,
            "terminal_threshold": stats.terminal_threshold,
            "mode_counts": stats.mode_counts.tolist(),
            "mean_sq_norm": stats.mean_sq_norm.tolist(),
        },
    }
    try:
        beta, alpha = sim.decay_fit(stats)
        results["ensemble"]["decay_fit"] = {"beta": beta, "alpha": alpha}
    except NcsPassiveError:
        results["ensemble"]["decay_fit"] = None

    if dump_traces:
        trace_dir = Path(str(out_path) + ".traces")
        trace_dir.mkdir(parents=True, exist_ok=True)
        for trial in range(s.trials):
            trace = sim.simulate(
                config.plant, gain, config.schedule, config.loss, signal,
                s.horizon, s.seed + trial, x0=s.x0,
            )
            sim.trace_to_csv(trace, trace_dir / f"trace_{trial:04d}.csv")
        results["traces_dir"] = trace_dir.name

    _write_report(out_path, "simulate", config, results, started)
    return EXIT_OK


def _reverify_analysis(config: ScenarioConfig, results: dict) -> list[str]:
    problems = []
    gain = Gain(_matrix(results["gain"], "report.results.gain"))
    dist = mode_distribution(config.loss)
    margin = DefinitenessMargin(config.solver.margin)
    stab = results.get("stability", {})
    if stab.get("status") == "certified":
        period = config.schedule.period
        ps = [np.asarray(p, dtype=float) for p in stab["P"]]
        if len(ps) != period:
            problems.append("stability: stored P count does not match schedule period")
        else:
            ok = _verify_stability_assignment(config.plant, gain, config.schedule, dist, ps, margin)
            if not ok:
                problems.append("stability: stored certificate no longer verifies")
    pas = results.get("passivity", {})
    if pas.get("status") == "certified":
        p = np.asarray(pas["P"], dtype=float)
        eta = float(pas["eta"])
        ok = _verify_passivity_assignment(config.plant, gain, dist, p, eta, margin)
        if not ok:
            problems.append("passivity: stored certificate no longer verifies")
    return problems


def _verify_stability_assignment(plant, gain, schedule, dist, ps, margin) -> bool:
    from .numerics import is_neg_definite, is_pos_definite

    period = schedule.period
    for k in range(period):
        fam = closed_loop(plant, gain, k, schedule)
        nxt = ps[(k + 1) % period]
        m = -ps[k]
        for (i, j), p in dist.items():
            a = fam.a(i, j)
            m = m + p * (a.T @ nxt @ a)
        if not is_neg_definite(m, margin) or not is_pos_definite(ps[k], margin):
            return False
    return True


def _verify_passivity_assignment(plant, gain, dist, p, eta, margin) -> bool:
    from .numerics import is_neg_definite, is_pos_definite

    fam = closed_loop(plant, gain, 0, full_packet_schedule())
    n, m1 = plant.n, plant.m1
    top_left = -p.copy()
    top_right = np.zeros((n, m1))
    for (i, j), w in dist.items():
        a = fam.a(i, j)
        top_left = top_left + w * (a.T @ p @ a)
        top_right = top_right + w * (a.T @ p @ fam.b)
    top_right = top_right - analysis.averaged_output_matrix(fam, dist).T
    bottom = fam.b.T @ p @ fam.b + 2.0 * eta * np.eye(m1) - fam.d.T - fam.d
    form = np.block([[top_left, top_right], [top_right.T, bottom]])
    return is_neg_definite(form, margin) and is_pos_definite(p, margin)


def _reverify_synthesis(config: ScenarioConfig, results: dict) -> list[str]:
    problems = []
    synth = results.get("synthesis", {})
    if synth.get("status") != "certified":
        return problems
    margin = DefinitenessMargin(config.solver.margin)
    dist = mode_distribution(config.loss)
    eta = float(synth["eta"])
    x = np.asarray(synth["X"], dtype=float)
    y = np.asarray(synth["Y"], dtype=float)
    k = np.asarray(synth["K"], dtype=float)
    prob = synthesis.build_synthesis_lmi(config.plant, dist, eta, margin)
    assignment = {"X": x}
    if "Y" in prob.variables:
        assignment["Y"] = y
    report = lmi.verify(prob, assignment, margin)
    if not report.passed:
        problems.append("synthesis: stored (X, Y) no longer verifies the block LMI")
    recovered = synthesis.recover_gain(x, y).K
    if not np.allclose(recovered, k, rtol=1e-8, atol=1e-10):
        problems.append("synthesis: stored K is not Y X^{-1} of the stored transform")
    return problems


def cmd_report(report_path) -> int:
    try:
        text = Path(report_path).read_text()
    except OSError as exc:
        print(f"error: {report_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not text.strip():
        print(f"error: {report_path}: empty report file", file=sys.stderr)
        return EXIT_INPUT
    try:
        report = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"error: {report_path}:{exc.lineno}: {exc.msg}", file=sys.stderr)
        return EXIT_INPUT
    for key in ("command", "config", "results"):
        if key not in report:
            print(f"error: {report_path}: missing {key!r}", file=sys.stderr)
            return EXIT_INPUT

    try:
        config = parse_config(report["config"], where=f"{report_path}#config")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    command = report["command"]
    results = report["results"]
    lines = [f"command: {command}", f"tool: {report.get('tool', {})}"]

    problems: list[str] = []
    if report.get("config_digest") != _digest(report["config"]):
        problems.append("config digest mismatch")
    if report.get("results_digest") != _digest(results):
        problems.append("results digest mismatch")
    try:
        if command == "analyze":
            problems += _reverify_analysis(config, results)
            sms = results.get("sms", {})
            lines.append(f"rho = {sms.get('rho'):.6f} (stable: {sms.get('stable')})")
            for section in ("stability", "passivity"):
                if section in results:
                    entry = results[section]
                    lines.append(f"{section}: {entry.get('status')}")
                    if entry.get("status") == "certified" and "verify" in entry:
                        worst = max(
                            c["lambda_max"] - c["threshold"]
                            for c in entry["verify"]["constraints"]
                        )
                        lines.append(f"  worst margin slack: {-worst:.3e}")
                    if section == "passivity" and entry.get("eta") is not None:
                        lines.append(f"  eta = {entry['eta']}")
        elif command == "synthesize":
            problems += _reverify_synthesis(config, results)
            synth = results.get("synthesis", {})
            lines.append(f"synthesis: {synth.get('status')}")
            if synth.get("status") == "certified":
                lines.append(f"  eta = {synth['eta']}")
                lines.append(f"  K = {synth['K']}")
                lines.append(f"  rho = {synth['rho']:.6f}")
        elif command == "simulate":
            ens = results.get("ensemble", {})
            lines.append(
                f"ensemble: {ens.get('trials')} trials x {ens.get('horizon')} steps, "
                f"dissipation {ens.get('dissipation_mean'):.4f} +- {ens.get('dissipation_se'):.4f}"
            )
            if ens.get("decay_fit"):
                lines.append(f"  decay fit alpha = {ens['decay_fit']['alpha']:.4f}")
        else:
            print(f"error: unknown command {command!r} in report", file=sys.stderr)
            return EXIT_INPUT
    except (KeyError, TypeError, ValueError, NcsPassiveError) as exc:
        print(f"error: malformed report: {exc}", file=sys.stderr)
        return EXIT_INPUT

    print("\n".join(lines))
    if problems:
        for p in problems:
            print(f"VERIFICATION FAILURE: {p}", file=sys.stderr)
        return EXIT_VERIFY
    print("certificates re-verified" if command in ("analyze", "synthesize") else "ok")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ncspassive",
        description="Passivity analysis and synthesis for lossy networked control loops.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="scenario config JSON")
        p.add_argument("--out", default="ncspassive-report.json", help="report output path")
        p.add_argument("--eta", help='override config eta (number or "max")')
        p.add_argument("--seed", type=int, help="override solver seed")
        p.add_argument("--margin", type=float, help="override margin epsilon")
        p.add_argument("--budget", type=int, help="override solver iteration budget")

    add_common(sub.add_parser("analyze", help="certify stability and passivity of a given gain"))
    add_common(sub.add_parser("synthesize", help="solve for a passivating gain"))
    p_sim = sub.add_parser("simulate", help="Monte Carlo ensemble for a gain")
    add_common(p_sim)
    p_sim.add_argument("--gain", help="gain source: report JSON path or inline matrix")
    p_sim.add_argument("--dump-traces", action="store_true", help="write per-trace CSVs")
    p_rep = sub.add_parser("report", help="summarize and re-verify a report file")
    p_rep.add_argument("report", help="report JSON path")

    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.report)
        config_path = _apply_overrides(args)
        if args.command == "analyze":
            return cmd_analyze(config_path, args.out)
        if args.command == "synthesize":
            return cmd_synthesize(config_path, args.out)
        return cmd_simulate(config_path, args.out, args.gain, args.dump_traces)
    except (ConfigError, AssumptionViolated) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NcsPassiveError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def _apply_overrides(args):
    """Fold CLI overrides into the config by writing a patched copy if needed."""
    overrides = {}
    if args.eta is not None:
        overrides["eta"] = "maximize" if args.eta in ("max", "maximize") else float(args.eta)
    solver_over = {}
    if args.seed is not None:
        solver_over["seed"] = args.seed
    if args.margin is not None:
        solver_over["margin"] = args.margin
    if args.budget is not None:
        solver_over["budget"] = args.budget
    if not overrides and not solver_over:
        return args.config

    config = load_config(args.config)  # validates before patching
    data = dict(config.raw)
    data.update(overrides)
    if solver_over:
        solver = dict(data.get("solver", {}))
        solver.update(solver_over)
        data["solver"] = solver
    patched = Path(args.out).with_suffix(".config-patched.json")
    patched.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return patched


if __name__ == "__main__":
    sys.exit(main())
