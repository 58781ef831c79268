"""Command-line entry point: ``spde-ldp <command> [--config PATH] ...``.

Each command computes all of its results in memory, then writes them with
write-then-rename into the output directory.  Exit status is 0 on success,
2 for invalid configuration or arguments and 1 for numerical failures.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .config import build_model, build_state, load_config
from .errors import ConfigError, SpdeLdpError
from .experiments import (
    quasipotential_preservation_study,
    spatial_preservation_study,
    temporal_gap_study,
)
from .integrator import IntegratorConfig, max_stable_stepsize, simulate_ensemble, simulate_path
from .io import Artifact, csv_bytes, json_bytes, path_csv, read_path_csv, write_artifacts
from .montecarlo import (
    empirical_invariant_measure,
    fernique_moment_exact,
    fernique_moment_mc,
    ldp_slope,
    normal_two_sided_tail,
    tail_check,
    variance_with_se,
)
from .nonlinearity import Zero
from .paths import Control
from .quasipotential import (
    MinimizerOptions,
    minimize_quasipotential,
    minimize_quasipotential_full,
    minimize_tube_action,
    quasipotential_linear,
)
from .rate import control_from_path, rate_full, rate_semi
from .skeleton import solve_skeleton

__all__ = ["main"]

COMMANDS = ("simulate", "rate", "quasipotential", "mc-verify", "tail-check", "preserve", "tau-max")


class Run:
    """Shared state of one command invocation."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.meta = {"config_hash": cfg.hash, "seed": cfg.seed, "version": __version__}
        self.model = build_model(cfg)
        self.artifacts = []
        self.text = []

    @property
    def threads(self):
        return self.cfg.output["threads"]

    def integrator(self, **overrides):
        it = self.cfg.integrator
        kw = dict(tau=it["tau"], eps=it["eps"], seed=it["seed"], stride=it["stride"],
                  substeps=it["substeps"], enforce_stability=it["enforce_stability"])
        kw.update(overrides)
        return IntegratorConfig(**kw)

    def state(self, spec, where):
        return build_state(spec, self.model.n, where)

    def config_block(self):
        data = self.cfg.to_dict()
        data["output"].pop("dir")
        data["output"].pop("threads")
        return data

    def add(self, name, payload):
        ext = name.rsplit(".", 1)[-1]
        if ext in self.cfg.output["formats"]:
            self.artifacts.append(Artifact(name, payload))

    def figure(self, name, render, *args):
        """Render a figure only when PNG output is requested (matplotlib is imported lazily)."""
        if "png" in self.cfg.output["formats"]:
            from . import plotting
            self.add(name, getattr(plotting, render)(*args))

    def csv(self, name, header, rows):
        self.add(name, csv_bytes(header, rows, self.meta))

    def json(self, name, obj):
        self.add(name, json_bytes({"config": self.config_block(), **obj}, self.meta))

    def say(self, line=""):
        self.text.append(line)

    def finish(self, stem):
        body = "\n".join(self.text) + "\n"
        header = (f"config_hash={self.meta['config_hash']} seed={self.meta['seed']} "
                  f"version={self.meta['version']}\n")
        self.add(f"{stem}.txt", header + body)
        written = write_artifacts(self.cfg.output["dir"], self.artifacts)
        sys.stdout.write(body)
        return written


def _fmt(x):
    if isinstance(x, float):
        return "+inf" if math.isinf(x) and x > 0 else f"{x:.10g}"
    return str(x)


def cmd_simulate(run, args):
    it = run.cfg.integrator
    cfg = run.integrator()
    y0 = run.state(it["y0"], "integrator.y0")
    path = simulate_path(y0, it["T"], run.model, cfg)
    run.add("trajectory.csv", path_csv(path, run.meta))
    summary = {"model": run.model.describe(), "steps": path.steps, "output_step": path.h,
               "final_state": path.end}
    run.say(f"simulated {path.steps} output intervals of {_fmt(path.h)} up to T = {_fmt(path.T)}")
    n_paths = run.cfg.study["simulate"]["paths"]
    if n_paths > 1:
        finals = simulate_ensemble(y0, it["T"], run.model, cfg, n_paths, threads=run.threads,
                                   transform=lambda nodes: nodes[:, -1, :])
        mean = finals.mean(axis=0)
        var = finals.var(axis=0, ddof=1)
        rows = []
        exact = isinstance(run.model.nonlinearity, Zero)
        op = run.model.operator
        for i in range(run.model.n):
            row = [i + 1, mean[i], math.sqrt(var[i] / n_paths), var[i]]
            if exact:
                row += [math.exp(-op.rates[i] * it["T"]) * y0[i],
                        cfg.eps**2 * float(op.convolution_variance(it["T"])[i])]
            rows.append(row)
        header = ["mode", "mean", "mean_se", "variance"]
        if exact:
            header += ["exact_mean", "exact_variance"]
        run.csv("moments.csv", header, rows)
        summary["ensemble"] = {"paths": n_paths, "mean": mean, "variance": var}
        run.say(f"ensemble of {n_paths} trajectories: moments in moments.csv")
    run.json("simulate.json", summary)
    run.figure("trajectory.png", "path_png", path, "trajectory")
    for i, v in enumerate(path.end[:6]):
        run.say(f"  Y_{i + 1}(T) = {_fmt(float(v))}")
    return run.finish("simulate")


def cmd_rate(run, args):
    if not args.path:
        raise ConfigError("--path: the rate command needs a path CSV")
    z = read_path_csv(args.path)
    if z.n != run.model.n:
        raise ConfigError(f"--path: path has {z.n} modes but model.n = {run.model.n}")
    block = run.cfg.study["rate"]
    y = z.start if block["y0"] is None else run.state(block["y0"], "study.rate.y0")
    semi = rate_semi(z, y, run.model)
    out = {"semi": semi.to_dict()}
    run.say(f"rate_semi = {_fmt(semi.value)}   (h = {_fmt(z.h)}, rule {semi.rule})")
    if block["tau"] is not None:
        full = rate_full(z, y, run.model, block["tau"])
        out["full"] = full.to_dict()
        run.say(f"rate_full = {_fmt(full.value)}   (tau = {_fmt(block['tau'])})")
    if semi.finite:
        ctrl = control_from_path(z, run.model)
        header = ["t"] + [f"mode_{i}" for i in range(1, ctrl.n + 1)]
        rows = ([k * ctrl.h, *ctrl.values[k]] for k in range(ctrl.steps))
        run.csv("control.csv", header, rows)
    run.json("rate.json", out)
    return run.finish("rate")


def _options(block, seed):
    return MinimizerOptions(tol=block["tol"], ftol=block["ftol"], max_iter=block["max_iter"],
                            restarts=block["restarts"], seed=seed)


def cmd_quasipotential(run, args):
    block = run.cfg.study["quasipotential"]
    u = run.state(block["target"], "study.quasipotential.target")
    opts = _options(block, run.cfg.seed)
    if block["tau"] is None:
        res = minimize_quasipotential(u, run.model, block["horizons"], block["points"], opts,
                                      h=block["h"])
    else:
        res = minimize_quasipotential_full(u, run.model, block["tau"], block["horizons"],
                                           block["points"], opts, h=block["h"])
    out = res.to_dict()
    run.say(f"V = {_fmt(res.value)} at T* = {_fmt(res.T_star)} (grad {res.grad_norm:.3e})")
    if run.model.is_linear:
        try:
            out["closed_form"] = quasipotential_linear(u, run.model)
            run.say(f"closed form (infinite horizon) = {_fmt(out['closed_form'])}")
        except SpdeLdpError:
            pass
    for T, v in res.per_horizon:
        run.say(f"  T = {_fmt(T):>8}  action = {_fmt(v)}")
    for flag in res.flags:
        run.say(f"  note: {flag}")
    run.json("quasipotential.json", out)
    run.csv("per_horizon.csv", ["T", "value"], res.per_horizon)
    run.add("path.csv", path_csv(res.path, run.meta))
    run.figure("path.png", "path_png", res.path, "minimizing path")
    return run.finish("quasipotential")


def cmd_mc_verify(run, args):
    it = run.cfg.integrator
    block = run.cfg.study["mc_verify"]
    y0 = run.state(it["y0"], "integrator.y0")
    phi = Control.constant(run.state(block["control"], "study.mc_verify.control"),
                           it["T"], block["h"])
    z = solve_skeleton(y0, phi, run.model)
    action = rate_semi(z, y0, run.model).value
    deltas = [d for d in (block["deltas"] or []) if d != block["delta"]]
    fit = ldp_slope(z, block["delta"], block["eps"], run.model, block["samples"], run.cfg.seed,
                    block["tau"], run.threads, block["correct_grid"], extra_deltas=deltas)
    tube = {}
    for d in [block["delta"], *deltas]:
        tube[d] = minimize_tube_action(z, d, run.model)[0]
    out = fit.to_dict()
    out.update({"path_action": action, "tube_action": [{"delta": d, "value": v}
                                                       for d, v in tube.items()]})
    run.say(f"skeleton action I(z) = {_fmt(action)}; tube action = {_fmt(tube[block['delta']])}")
    rows = fit.extra.get("by_delta") or [
        {"eps": r["eps"], "delta": block["delta"], **{k: r[k] for k in r if k != "eps"}}
        for r in fit.rows()]
    keys = ["eps", "delta", "p", "se", "hits", "samples", "seed", "rate", "resolved"]
    run.csv("mc.csv", keys, ([r[k] for k in keys] for r in rows))
    for r in rows:
        run.say(f"  eps = {_fmt(r['eps']):>6} delta = {_fmt(r['delta']):>6} "
                f"p = {_fmt(r['p'])} -eps^2 log p = {_fmt(r['rate'])}")
    run.say(f"aggregate = {_fmt(fit.aggregate)} inconclusive = {fit.inconclusive}")
    run.json("mc.json", out)
    run.figure("mc.png", "slope_png", fit, tube[block["delta"]], "small-noise scaling")
    return run.finish("mc-verify")


def cmd_tail_check(run, args):
    it = run.cfg.integrator
    block = run.cfg.study["tail_check"]
    model, op = run.model, run.model.operator
    samples = empirical_invariant_measure(it["eps"], model, it["tau"], block["burn_in"],
                                          block["window"], block["thin"], run.cfg.seed,
                                          block["chains"], run.threads)
    report = tail_check(samples, block["K"], it["eps"], block["alphas"])
    var, se = variance_with_se(samples)
    out = {"samples": int(samples.shape[0]), "variance": var, "variance_se": se,
           "tail": report.to_dict()}
    run.say(f"{samples.shape[0]} thinned stationary samples")
    if isinstance(model.nonlinearity, Zero):
        exact = it["eps"] ** 2 * op.stationary_variance()
        out["exact_variance"] = exact
        for i in range(min(model.n, 6)):
            run.say(f"  var_{i + 1} = {_fmt(float(var[i]))} +- {float(se[i]):.2e} "
                    f"(exact {_fmt(float(exact[i]))})")
        if model.n == 1:
            std = math.sqrt(float(exact[0]))
            out["gaussian_tail"] = [normal_two_sided_tail(K / std) for K in report.K]
    kappa = block["kappa_fraction"] * float(np.min(op.rates / op.q))
    t = block["fernique_t"]
    exact_m = fernique_moment_exact(kappa, t, op)
    mc_m, mc_se = fernique_moment_mc(kappa, t, op, block["fernique_samples"], run.cfg.seed)
    out["fernique"] = {"kappa": kappa, "t": t, "exact": exact_m, "mc": mc_m, "mc_se": mc_se}
    run.say(f"exponential moment at kappa = {_fmt(kappa)}: exact {_fmt(exact_m)}, "
            f"MC {_fmt(mc_m)} +- {mc_se:.2e}")
    rows = list(report.rows())
    keys = ["K", "mu", "exceed", "samples", "rate"]
    run.csv("tail.csv", keys, ([r[k] for k in keys] for r in rows))
    for r in rows:
        run.say(f"  K = {_fmt(r['K']):>6}  mu(|u|>K) = {_fmt(r['mu'])} {r['bound']}")
    run.json("tail.json", out)
    std = it["eps"] * math.sqrt(float(op.stationary_variance()[0]))
    if std > 0:
        run.figure("tail.png", "tail_png", samples[:, 0], std, "stationary samples")
    return run.finish("tail-check")


def cmd_preserve(run, args):
    it = run.cfg.integrator
    block = run.cfg.study["preserve"]
    model = run.model
    N = model.n
    kind = block["kind"]
    if kind != "temporal" and max(block["n_ladder"]) > N:
        raise ConfigError(f"study.preserve.n_ladder: exceeds the reference dimension model.n = {N}")
    if kind == "quasipotential":
        u = run.state(block["target"], "study.preserve.target")
        spatial, temporal = quasipotential_preservation_study(
            u, block["n_ladder"], block["tau_ladder"], model, block["minimize"],
            block["horizons"], block["points"], MinimizerOptions(seed=run.cfg.seed))
        reports = {"spatial": spatial, "temporal": temporal}
    else:
        x = run.state(it["y0"], "integrator.y0")
        phi = Control.constant(run.state(block["control"], "study.preserve.control"),
                               it["T"], block["h"])
        if kind == "spatial":
            reports = {"spatial": spatial_preservation_study(x, phi, block["n_ladder"], model,
                                                             block["skeleton_substeps"])}
        else:
            z = solve_skeleton(x, phi, model, block["skeleton_substeps"])
            reports = {"temporal": temporal_gap_study(z, x, block["tau_ladder"], model)}
    out = {"kind": kind}
    for name, rep in reports.items():
        out[name] = rep.to_dict()
        rows = list(rep.rows())
        keys = list(rows[0])
        run.csv(f"preserve_{name}.csv", keys, ([r[k] for k in keys] for r in rows))
        run.say(f"[{name}]")
        run.say(rep.table())
        for note in rep.notes:
            run.say(f"note: {note}")
        title = f"{name} study" if name == kind else f"{kind} study ({name})"
        run.figure(f"preserve_{name}.png", "ladder_png", rep, title)
    run.json("preserve.json", out)
    return run.finish("preserve")


def cmd_tau_max(run, args):
    lam1 = float(run.model.operator.rates[0])
    L = run.model.lipschitz
    tau0 = max_stable_stepsize(lam1, L)
    run.json("tau_max.json", {"lambda1": lam1, "lipschitz": L, "tau_max": tau0})
    run.say(f"tau_max = {_fmt(tau0)}  (lambda_1 = {_fmt(lam1)}, L_F = {_fmt(L)})")
    return run.finish("tau-max")


HANDLERS = {
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "quasipotential": cmd_quasipotential,
    "mc-verify": cmd_mc_verify,
    "tail-check": cmd_tail_check,
    "preserve": cmd_preserve,
    "tau-max": cmd_tau_max,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spde-ldp",
        description="Spectral Galerkin / exponential Euler toolkit for small-noise large deviations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name).strip().splitlines()[0]
                           if HANDLERS[name].__doc__ else None)
        p.add_argument("--config", help="YAML config file (defaults apply when omitted)")
        p.add_argument("--out", help="output directory (overrides config and environment)")
        p.add_argument("--seed", type=int, help="override integrator.seed")
        p.add_argument("--threads", type=int, help="worker threads (does not change results)")
        if name == "rate":
            p.add_argument("--path", help="path CSV with header t,mode_1,...")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(seed=args.seed, out=args.out,
                                                       threads=args.threads)
        HANDLERS[args.command](Run(cfg), args)
    except ConfigError as exc:
        print(f"spde-ldp {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except (SpdeLdpError, ArithmeticError, ValueError) as exc:
        print(f"spde-ldp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"spde-ldp {args.command}: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
