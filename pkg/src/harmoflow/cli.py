"""Command-line interface: ``harmoflow synth | reconstruct | metrics``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver failure.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from contextlib import contextmanager

import numpy as np

from .config import MODEL_NAMES, RunConfig
from .errors import ConfigError, DataError, ShapeError, SolverError, SynthesisError

log = logging.getLogger("harmoflow")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 0, 2, 3, 4


class Timer:
    def __init__(self):
        self.stages = {}

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = time.perf_counter() - start


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(args, keys):
    config = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {k: getattr(args, k, None) for k in keys}
    return config.updated(**{k: v for k, v in overrides.items() if v not in (None, False)})


# -- synth ------------------------------------------------------------------

def cmd_synth(args):
    from .synth import FULL_PERIODS, NoiseSpec, make_instance
    from .io import write_amplitude, write_tensor

    config = _load_config(args, ["scale", "periods", "frames", "seed", "gain", "substeps",
                                 "grad_sigma", "poisson", "salt_pepper"])
    noise = None
    if config.poisson or config.salt_pepper > 0:
        noise = NoiseSpec(poisson=config.poisson, salt_pepper=config.salt_pepper, seed=config.seed)
    timer = Timer()
    with timer.stage("synthesis"):
        inst = make_instance(scale=config.scale, periods=config.periods or FULL_PERIODS,
                             gain=config.gain, seed=config.seed, substeps=config.substeps,
                             grad_sigma=config.grad_sigma, noise=noise, frames=config.frames)
    files = {"amplitude": f"{args.out}_amplitude.hof", "clean": f"{args.out}_clean.hof"}
    write_amplitude(files["amplitude"], inst.amplitude)
    write_tensor(files["clean"], inst.images)
    if inst.noisy is not None:
        files["noisy"] = f"{args.out}_noisy.hof"
        write_tensor(files["noisy"], inst.noisy)
    manifest = dict(command="synth", config=config.as_dict(), instance=inst.meta,
                    shape=list(inst.images.shape), files=files, timings=timer.stages)
    _write_json(f"{args.out}.json", manifest)
    print(f"synthesized {inst.images.shape[0]} x {inst.images.shape[1]} x {inst.images.shape[2]} "
          f"sequence, omega={inst.params.omega:.6g}, seed={config.seed}")
    return EXIT_OK


# -- reconstruct ------------------------------------------------------------

SOLVER_KEYS = ["model", "lam", "omega", "periods", "frames", "levels", "eta", "cg_iters",
               "irls_iters", "eps0", "delta0", "sigma_pre", "median", "warps", "seed",
               "debug_unit_weights"]


def run_solver(images, h, config, trace):
    """Dispatch to the configured solver; returns the amplitude."""
    from .baselines import harmonic_hs_iterate, pairwise_amplitude
    from .irls import irls_reconstruct
    from .model1 import model1_reconstruct

    solver = config.solver_config()
    if config.model == "model1":
        return model1_reconstruct(images, h, solver, trace=trace)
    if config.model in ("model2", "model3"):
        return irls_reconstruct(images, h, solver, int(config.model[-1]),
                                debug_unit_weights=config.debug_unit_weights, trace=trace)
    if config.model == "harmonic-hs":
        return harmonic_hs_iterate(images, h, solver.lam, solver.cg_iters,
                                   preprocess_sigma=solver.preprocess_sigma)
    return pairwise_amplitude(images, h, solver.lam, solver.cg_iters,
                              preprocess_sigma=solver.preprocess_sigma)


def cmd_reconstruct(args):
    from .io import read_tensor, write_amplitude, write_pgm

    config = _load_config(args, SOLVER_KEYS)
    solver = config.solver_config()
    timer = Timer()
    with timer.stage("read"):
        images = read_tensor(args.input)
    if images.ndim != 3:
        raise DataError(f"{args.input}: expected a (T, n1, n2) sequence, got dims {images.shape}")
    h = config.harmonic_params(images.shape[0])
    budget = (f"model={config.model} lam={solver.lam:g} levels={solver.levels} "
              f"cg_iters={solver.cg_iters} irls_iters={solver.irls_iters}")
    print(f"budgets: {budget}", file=sys.stderr)
    trace = []
    with timer.stage("solve"):
        a = run_solver(images, h, config, trace)
    files = {"amplitude": f"{args.out}.hof", "trace": f"{args.out}_trace.csv"}
    with timer.stage("write"):
        write_amplitude(files["amplitude"], a)
        with open(files["trace"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "irls_iter", "cg_iter", "residual"])
            writer.writerows((lv, k, i, repr(float(r))) for lv, k, i, r in trace)
        bounds = {}
        for k in range(a.shape[0]):
            name = f"abs{k + 1}"
            files[name] = f"{args.out}_{name}.pgm"
            bounds[name] = write_pgm(files[name], np.abs(a[k]))
    manifest = dict(command="reconstruct", input=os.path.abspath(args.input),
                    config=config.as_dict(), solver=vars(solver), omega=h.omega,
                    periods=h.periods, frames=h.frames, files=files, pgm_bounds=bounds,
                    cg_iterations_run=len(trace), timings=timer.stages)
    _write_json(f"{args.out}.json", manifest)
    print(f"wrote {files['amplitude']} ({timer.stages['solve']:.2f} s solve)")
    return EXIT_OK


# -- metrics ----------------------------------------------------------------

def cmd_metrics(args):
    from .io import read_amplitude, read_tensor
    from .metrics import amplitude_ssim, issim, relative_error, relative_image_error, write_report
    from .synth import render_harmonic

    truth = read_amplitude(args.truth)
    estimate = read_amplitude(args.estimate)
    if truth.shape != estimate.shape:
        raise ShapeError(f"truth {truth.shape} and estimate {estimate.shape} differ")
    rows = [("RE", relative_error(estimate, truth))]
    rows += [(f"SSIM_{k}", v) for k, v in amplitude_ssim(estimate, truth).items()]
    sidecar = os.path.splitext(args.estimate)[0] + ".json"
    meta = {}
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
    if args.images:
        images = read_tensor(args.images)
        if images.ndim != 3 or images.shape[1:] != truth.shape[1:]:
            raise ShapeError(f"images {images.shape} do not match the amplitude grid {truth.shape[1:]}")
        config = RunConfig().updated(omega=args.omega, periods=args.periods)
        if config.omega is None and config.periods is None:
            if "omega" not in meta:
                raise ConfigError("give --omega or --periods (no estimate manifest found)")
            config = config.updated(omega=meta["omega"])
        h = config.harmonic_params(images.shape[0])
        rendered = render_harmonic(images[0], estimate, h, substeps=args.substeps,
                                   grad_sigma=args.grad_sigma)
        rows.append(("RIE", relative_image_error(rendered, images)))
        rows.append(("ISSIM", issim(rendered, images)))
    rows += [(f"time_{stage}_s", sec) for stage, sec in meta.get("timings", {}).items()]
    write_report(args.out, rows)
    for name, value in rows:
        print(f"{name},{value:.6g}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _model_flags(p):
    p.add_argument("--config", help="JSON run configuration (flags override it)")
    p.add_argument("--model", choices=MODEL_NAMES)
    p.add_argument("--lambda", dest="lam", type=float, help="regularization weight")
    p.add_argument("--omega", type=float, help="angular frequency in rad/frame")
    p.add_argument("--periods", type=int, help="whole periods covered by the sequence")
    p.add_argument("--frames", type=int, help="expected number of frames (checked)")
    p.add_argument("--levels", type=int, help="pyramid levels")
    p.add_argument("--eta", type=float, help="pyramid downsampling factor")
    p.add_argument("--cg-iters", dest="cg_iters", type=int,
                   help="CG iterations per solve (sweeps for the baselines)")
    p.add_argument("--irls-iters", dest="irls_iters", type=int)
    p.add_argument("--eps0", type=float)
    p.add_argument("--delta0", type=float)
    p.add_argument("--sigma-pre", dest="sigma_pre", type=float, help="presmoothing sigma")
    p.add_argument("--median", type=int, help="median filter window (1 disables)")
    p.add_argument("--warps", type=int)
    p.add_argument("--seed", type=int, help="recorded in the manifest")
    p.add_argument("--debug-unit-weights", dest="debug_unit_weights", action="store_true",
                   help="force unit IRLS data weights")


def build_parser():
    parser = argparse.ArgumentParser(prog="harmoflow",
                                     description="Time-harmonic optical flow reconstruction.")
    parser.add_argument("--threads", type=int, help="cap on BLAS/OpenMP worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic harmonic sequence")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", type=float, help="fraction of the full-size experiment")
    p.add_argument("--periods", type=int)
    p.add_argument("--frames", type=int, help="override the scaled frame count")
    p.add_argument("--gain", type=float, help="amplitude gain in px/frame")
    p.add_argument("--substeps", type=int)
    p.add_argument("--grad-sigma", dest="grad_sigma", type=float)
    p.add_argument("--poisson", action="store_true", help="add Poisson noise")
    p.add_argument("--salt-pepper", dest="salt_pepper", type=float,
                   help="fraction of salt-and-pepper pixels")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct", help="estimate the amplitude of an image sequence")
    p.add_argument("--input", required=True, help="sequence tensor file (T, n1, n2)")
    p.add_argument("--out", required=True, help="output path prefix")
    _model_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="compare an estimate with the ground truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--images", help="reference sequence for RIE and ISSIM")
    p.add_argument("--omega", type=float)
    p.add_argument("--periods", type=int)
    p.add_argument("--substeps", type=int, default=4)
    p.add_argument("--grad-sigma", dest="grad_sigma", type=float, default=1.0)
    p.add_argument("--out", required=True, help="CSV report path")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from threadpoolctl import threadpool_limits

    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ShapeError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SynthesisError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
