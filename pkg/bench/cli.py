"""
tensorcs command line: design | learn | joint | recon | sweep.

Exit codes: 0 success, 2 invalid argument or resource limit, 3 numerical failure.
"""

import argparse
import csv
import dataclasses
import os
from typing import List, Optional, Sequence

import numpy as np

from dictionary.cksvd import learn_cksvd
from dictionary.coupling import TrainingSet
from dictionary.ctksvd import learn
from sensing.design import gaussian_sensing
from sensing.sensing_method_list import get_sensing_method
from tensor.ops import kron_factors, multi_mode_product
from tensor.tensor_io import load_tensor, save_tensor
from util.detail import LOGGER
from util.errors import InvalidArgument, NumericalFailure, ResourceLimit, require
from .config import ExperimentConfig, expand_grid, load_config
from .joint import joint_optimize
from .patches import read_pgm, reconstruct_image, write_pgm
from .sweep import COLUMNS, run_sweep
from .synthetic import gen_synthetic, random_dictionaries
from .trials import patch_sets, recover

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

SWEEP_HELP = f"Sweep CSV columns, in order: {', '.join(COLUMNS)}. Traces are space separated."


def _out_dir(args, cfg: ExperimentConfig) -> str:
    path = args.out or cfg.out or '.'
    os.makedirs(path, exist_ok=True)
    return path


def _load_all(paths: Optional[Sequence[str]]) -> Optional[List[np.ndarray]]:
    return [load_tensor(p) for p in paths] if paths else None


def _save_factors(out: str, prefix: str, factors: Sequence[np.ndarray]) -> None:
    for i, f in enumerate(factors, start=1):
        save_tensor(os.path.join(out, f"{prefix}_{i}.tnsr"), f)


def _write_trace(path: str, header: Sequence[str], rows) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(['' if v is None else repr(v) if isinstance(v, float) else v for v in row])


def design_command(args, cfg: ExperimentConfig, grid) -> None:
    rng = np.random.default_rng(cfg.seed)
    psis = _load_all(args.psi) or random_dictionaries(cfg.n, cfg.nhat, rng)
    phis0 = gaussian_sensing(cfg.m, [psi.shape[0] for psi in psis], rng)

    result = get_sensing_method(cfg.design).design(psis, phis0, cfg.design_params)
    out = _out_dir(args, cfg)
    _save_factors(out, 'phi', result.phis)
    _write_trace(os.path.join(out, 'design_trace.csv'), ('iteration', 'objective'),
                 enumerate((float(v) for v in result.objective_trace)))
    LOGGER.info(f"{result.method} design written to {out} after {result.iterations_used} iterations")


def learn_command(args, cfg: ExperimentConfig, grid) -> None:
    require(cfg.learner != 'none', "The learn command needs learner tksvd, ctksvd or cksvd")
    rng = np.random.default_rng(cfg.seed)
    if args.train:
        train = TrainingSet(load_tensor(args.train))
    else:
        require(cfg.train_count >= 1, "Set train_count or pass --train")
        train = TrainingSet(gen_synthetic(cfg).train.signals)

    ns = train.signal_shape
    phis = _load_all(args.phi) or gaussian_sensing(cfg.m, ns, rng)
    psis0 = _load_all(args.psi) or random_dictionaries(ns, cfg.nhat, rng)

    if cfg.learner == 'cksvd':
        result = learn_cksvd(train.vectorized(), kron_factors(phis), kron_factors(psis0), cfg.learn_params)
    else:
        params = dataclasses.replace(cfg.learn_params, coupled=cfg.learner == 'ctksvd')
        result = learn(train, phis, psis0, params)

    out = _out_dir(args, cfg)
    _save_factors(out, 'psi', result.psis)
    _write_trace(os.path.join(out, 'are_trace.csv'), ('iteration', 'are'),
                 enumerate((float(v) for v in result.are_trace), start=1))
    LOGGER.info(f"{cfg.learner} dictionaries written to {out}, final ARE {result.are_trace[-1]}")


def joint_command(args, cfg: ExperimentConfig, grid) -> None:
    train, test = patch_sets(cfg, np.random.default_rng(cfg.seed))
    result = joint_optimize(train, cfg, test)

    out = _out_dir(args, cfg)
    _save_factors(out, 'phi', result.phis)
    _save_factors(out, 'psi', result.psis)
    are_trace = list(result.are_trace) + [None] * (result.iterations - len(result.are_trace))
    _write_trace(os.path.join(out, 'joint_trace.csv'), ('iteration', 'psnr', 'mse', 'objective', 'are'),
                 zip(range(1, result.iterations + 1), result.psnr_trace, result.mse_trace, result.objective_trace,
                     are_trace))
    LOGGER.info(f"Joint result written to {out}, PSNR {result.psnr_trace[-1]} dB")


def recon_command(args, cfg: ExperimentConfig, grid) -> None:
    require(args.phi and args.psi, "recon needs --phi and --psi files for every mode")
    phis = _load_all(args.phi)
    psis = _load_all(args.psi)
    require(len(phis) == len(psis), f"Got {len(phis)} sensing matrices and {len(psis)} dictionaries")
    require(bool(args.image) != bool(args.measurements), "Pass exactly one of --image or --measurements")
    out = _out_dir(args, cfg)

    if args.image:
        result = reconstruct_image(read_pgm(args.image), phis, psis, cfg.sparsity_k, cfg.noise_var,
                                   np.random.default_rng(cfg.seed))
        path = os.path.join(out, 'recon.pgm')
        write_pgm(path, result.image)
        LOGGER.info(f"Reconstructed image written to {path}, PSNR {result.psnr} dB")
        return

    y = load_tensor(args.measurements)
    single = y.ndim == len(phis)
    stack = y[..., None] if single else y
    codes = recover(cfg, [phi @ psi for phi, psi in zip(phis, psis)], stack, cfg.sparsity_k)
    signal = multi_mode_product(codes, psis)
    if single:
        codes, signal = codes[..., 0], signal[..., 0]
    save_tensor(os.path.join(out, 'codes.tnsr'), codes)
    save_tensor(os.path.join(out, 'signal.tnsr'), signal)
    LOGGER.info(f"Codes and signal written to {out}")


def sweep_command(args, cfg: ExperimentConfig, grid) -> None:
    points = expand_grid(cfg, grid)
    out = args.out or cfg.out or 'sweep.csv'
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    result = run_sweep(points, out)
    failed = sum(1 for r in result.records if not r.ok)
    if failed:
        LOGGER.warning(f"{failed} of {len(result.records)} trials failed, see the error column of {out}")


COMMANDS = {
    'design': design_command,
    'learn': learn_command,
    'joint': joint_command,
    'recon': recon_command,
    'sweep': sweep_command,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tensorcs', description="Tensor compressive sensing toolkit",
                                     epilog=SWEEP_HELP)
    parser.add_argument("-t", "--self-test", action='store_true', help="Run a small end-to-end pipeline and exit")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML or JSON experiment config")
    common.add_argument("--seed", type=int, help="Overrides the seed of the config")
    common.add_argument("--out", help="Output directory (CSV file for sweep)")

    sub = parser.add_subparsers(dest='command')
    design = sub.add_parser('design', parents=[common], help="Design sensing matrices")
    design.add_argument("--psi", action='append', help="Dictionary file per mode, random when omitted")

    learn_parser = sub.add_parser('learn', parents=[common], help="Learn dictionaries")
    learn_parser.add_argument("--train", help="Training stack (TNSR), synthetic when omitted")
    learn_parser.add_argument("--phi", action='append', help="Sensing matrix file per mode")
    learn_parser.add_argument("--psi", action='append', help="Initial dictionary file per mode")

    sub.add_parser('joint', parents=[common], help="Jointly optimize sensing matrices and dictionaries")

    recon = sub.add_parser('recon', parents=[common], help="Recover signals or an image")
    recon.add_argument("--phi", action='append', help="Sensing matrix file per mode")
    recon.add_argument("--psi", action='append', help="Dictionary file per mode")
    recon.add_argument("--measurements", help="Measurement tensor or stack (TNSR)")
    recon.add_argument("--image", help="8-bit grayscale PGM to tile, measure and recover")

    sub.add_parser('sweep', parents=[common], help="Run a parameter sweep", epilog=SWEEP_HELP)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID

    if args.self_test:
        from util.self_test import SelfTest
        return SelfTest().run()

    if args.command is None:
        parser.print_usage()
        return EXIT_INVALID

    try:
        cfg, grid = load_config(args.config, seed=args.seed)
        COMMANDS[args.command](args, cfg, grid)
    except (InvalidArgument, ResourceLimit) as e:
        LOGGER.error(f"{args.command}: {e}")
        return EXIT_INVALID
    except NumericalFailure as e:
        LOGGER.error(f"{args.command}: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK
