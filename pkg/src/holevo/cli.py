"""Command-line front end.

Every subcommand builds its full output in memory before writing anything, so
a failure never leaves partial output. Exit codes: 0 success, 2 invalid input,
3 numerical failure.

File formats (JSON, complex numbers as ``[re, im]`` pairs, row-major)::

    channel: {"letters": [{"vector": [[re, im], ...], "cost": 1.0},
                          {"density": [[[re, im], ...], ...]}],
              "prior": [0.5, 0.5]}
    POVM:    {"elements": [[[[re, im], ...], ...], ...]}

Real numbers are accepted in place of ``[re, im]`` pairs.
"""

import argparse
import csv
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import decode, gaussian, info, reliability
from ._config import config_context
from .exceptions import NumericalError, ValidationError
from .qstate import DecisionRule, PureState, make_density

NAT = 1.0
BIT = 1.0 / math.log(2.0)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(ValidationError):
    """Unreadable or malformed input file or flag value."""


# --------------------------------------------------------------------------
# input parsing


def _vector(data, what):
    if not isinstance(data, list):
        raise InputError(f"{what}: expected a list of amplitudes")
    return np.array([_scalar(x, what) for x in data], dtype=complex)


def _scalar(x, what):
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise InputError(f"{what}: expected a number or [re, im], got {x!r}")


def _matrix(data, what):
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise InputError(f"{what}: expected a list of rows")
    return np.array([[_scalar(x, what) for x in row] for row in data], dtype=complex)


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}")


def load_channel(path: str):
    """Returns (ChannelCq, prior or None)."""
    data = _load_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("letters"), list):
        raise InputError(f"{path}: expected an object with a 'letters' list")
    letters = data["letters"]
    states, costs, vectors = [], [], []
    for i, letter in enumerate(letters):
        what = f"{path}: letter {i}"
        if not isinstance(letter, dict):
            raise InputError(f"{what}: expected an object")
        if "vector" in letter:
            vec = PureState(_vector(letter["vector"], what)).amplitudes
            vectors.append(vec)
            states.append(None)
        elif "density" in letter:
            states.append(make_density(_matrix(letter["density"], what)))
        else:
            raise InputError(f"{what}: needs 'vector' or 'density'")
        costs.append(letter.get("cost"))
    have_cost = [c is not None for c in costs]
    if any(have_cost) and not all(have_cost):
        raise InputError(f"{path}: give a cost for every letter or for none")
    cost = [float(c) for c in costs] if all(have_cost) else None
    if vectors and len(vectors) == len(letters):
        ch = info.ChannelCq.from_vectors(vectors, cost)
    else:
        it = iter(vectors)
        full = [s if s is not None else PureState(next(it)).density() for s in states]
        ch = info.ChannelCq(tuple(full), cost)
    prior = data.get("prior")
    if prior is not None:
        prior = info._check_prior(prior, ch.alphabet_size)
    return ch, prior


def load_povm(path: str) -> DecisionRule:
    data = _load_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("elements"), list):
        raise InputError(f"{path}: expected an object with an 'elements' list")
    return DecisionRule(tuple(_matrix(e, f"{path}: element {i}")
                              for i, e in enumerate(data["elements"])))


def parse_rates(text: str) -> np.ndarray:
    """``a,b,c`` lists rates; ``start:stop:count`` is an inclusive linear grid."""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            k = int(k)
            if k < 1:
                raise ValueError("count must be positive")
            return np.linspace(float(a), float(b), k)
        return np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError as exc:
        raise InputError(f"bad rate list {text!r}: {exc}")


def parse_modes(text: str):
    """``omega:N,omega:N,...``"""
    try:
        pairs = [t.split(":") for t in text.split(",") if t.strip()]
        return tuple(gaussian.ModeSpec(float(w), float(n)) for w, n in pairs)
    except ValueError as exc:
        raise InputError(f"bad mode list {text!r}: {exc}")


def load_spectrum(text: str, hbar: float):
    """Named spectrum (flat:N0, planck:thetaP) or a CSV file of omega,N rows."""
    if text.startswith(("flat:", "planck:")):
        return gaussian.parse_spectrum(text, hbar)
    try:
        with open(text, "r", encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise InputError(f"cannot read spectrum {text}: {exc.strerror}")
    try:
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        w = [float(r[0]) for r in rows]
        n = [float(r[1]) for r in rows]
    except (ValueError, IndexError):
        raise InputError(f"{text}: expected CSV rows 'omega,N'")
    if len(w) < 2:
        raise InputError(f"{text}: need at least two tabulated points")
    return gaussian.tabulated_spectrum(w, n)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# --------------------------------------------------------------------------
# output


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# subcommands


def _cmd_chi(args, scale):
    ch, prior = load_channel(args.channel)
    if prior is None:
        raise InputError("chi needs a 'prior' in the channel file")
    ens = ch.ensemble(prior)
    out = {"holevo": info.holevo_chi(ens) * scale}
    if args.povm:
        out["accessible"] = info.accessible_info(ens, load_povm(args.povm)) * scale
    return _json(out)


def _cmd_capacity(args, scale):
    ch, _ = load_channel(args.channel)
    res = info.optimize_chi(ch, budget=args.budget)
    return _json({"capacity": res.value * scale, "prior": res.optimizer,
                  "gap": res.gap * scale, "iterations": res.iterations,
                  "converged": res.converged})


def _cmd_cutoff(args, scale):
    ch, _ = load_channel(args.channel)
    value, prior = info.cutoff_rate(ch)
    return _json({"cutoff_rate": value * scale, "prior": prior})


def _cmd_binary(args, scale):
    q = info.binary_channel(args.epsilon)
    return _json({"epsilon": args.epsilon, "C": q.C * scale, "C1": q.C1 * scale,
                  "Ctilde": q.Ctilde * scale, "mu_prime_1": q.mu_prime_1 * scale,
                  "mutilde_prime_1": q.mutilde_prime_1 * scale})


def _curve_output(curve, scale, as_csv):
    if as_csv:
        return curve.to_csv(scale)
    rows = [{"R": r * scale, "Er": er * scale, "Eex": ex * scale, "E": e * scale,
             "regime": reg, "s_opt": s, "p_opt": p}
            for r, er, ex, e, reg, s, p in curve.rows()]
    out = {"curve": rows}
    if curve.knots:
        info_keys = ("lower", "upper", "capacity", "mu1")
        out["knots"] = {k: (v * scale if k in info_keys else v) for k, v in curve.knots.items()}
    return _json(out)


def _cmd_exponents(args, scale):
    ch, prior = load_channel(args.channel)
    rates = parse_rates(args.rates) / scale
    if args.pin_prior and prior is None:
        raise InputError("--pin-prior needs a 'prior' in the channel file")
    curve = reliability.exponents(ch, rates, budget=args.budget,
                                  prior=prior if args.pin_prior else None)
    return _curve_output(curve, scale, args.csv)


def _cmd_sim(args, scale):
    if args.channel:
        ch, prior = load_channel(args.channel)
        if prior is None:
            prior = np.full(ch.alphabet_size, 1.0 / ch.alphabet_size)
    else:
        ch = info.binary_pure_channel(args.epsilon)
        prior = np.array([0.5, 0.5])
    if args.seed < 0:
        raise InputError("seed must be a nonnegative integer")
    res = decode.random_coding_experiment(
        ch, prior, args.n, args.M, args.trials, args.seed, decoder=args.decoder,
        delta=args.delta, budget=args.budget, mode=args.mode, n_jobs=args.jobs)
    rec = res.to_record()
    rec["rejections"] = res.rejections
    if args.per_trial:
        rec["errors"] = res.errors
    return _json(rec)


def _cmd_gauss(args, scale):
    hbar = args.hbar
    kind = args.kind
    if kind == "mode":
        return _json({"N": args.N, "E": args.E,
                      "capacity": gaussian.single_mode_capacity(args.N, args.E) * scale})
    if kind == "multi":
        spec = gaussian.GaussianSpec(E=args.E, modes=parse_modes(args.modes), hbar=hbar)
        r = gaussian.multimode_capacity(spec)
        return _json({"theta": r.theta, "allocations": r.allocations,
                      "capacity": r.capacity * scale, "budget_residual": r.budget_residual})
    if kind == "wave":
        if args.band is None:
            raise InputError("gauss wave needs --band LOW HIGH")
        spec = gaussian.GaussianSpec(E=args.E, spectrum=load_spectrum(args.spectrum, hbar),
                                     band=tuple(args.band), hbar=hbar)
        r = gaussian.waveform_capacity(spec)
        return _json({"theta": r.theta, "capacity_per_second": r.capacity * scale,
                      "budget_residual": r.budget_residual, "error_estimate": r.error_estimate * scale})
    if kind == "broadband":
        r = gaussian.broadband(args.P, args.E, hbar)
        return _json({"theta_P": r.theta_P, "sP": r.sP * scale,
                      "capacity_per_second": r.C * scale})
    if kind == "reliability":
        rates = parse_rates(args.rates) / scale
        curve = gaussian.gaussian_reliability(args.E, rates)
        return _curve_output(curve, scale, args.csv)
    raise InputError(f"unknown gauss kind {kind!r}")


# --------------------------------------------------------------------------
# argument parser


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    def add_common(parser, default):
        # subcommands repeat the global flags with suppressed defaults so a
        # flag given before the subcommand is not reset
        def d(value):
            return value if default else argparse.SUPPRESS

        parser.add_argument("--log-base", choices=("nats", "bits"), default=d("nats"),
                            help="unit of every information quantity, inputs and outputs")
        parser.add_argument("--hbar", type=float, default=d(1.0))
        parser.add_argument("--output", "-o", default=d(None),
                            help="write to this file instead of stdout")
        parser.add_argument("--max-dim", type=int, default=d(None),
                            help="override the dimension cap")

    common = argparse.ArgumentParser(add_help=False)
    add_common(common, default=False)

    p = argparse.ArgumentParser(prog="holevo",
                                description="Capacities, decoders and exponents for "
                                            "classical-quantum channels.")
    add_common(p, default=True)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chi", parents=[common], help="Holevo quantity of an ensemble")
    s.add_argument("channel")
    s.add_argument("--povm", help="POVM file; also report the accessible information")
    s.set_defaults(func=_cmd_chi)

    s = sub.add_parser("capacity", parents=[common], help="maximize chi over the prior")
    s.add_argument("channel")
    s.add_argument("--budget", type=float)
    s.set_defaults(func=_cmd_capacity)

    s = sub.add_parser("cutoff", parents=[common], help="cutoff rate")
    s.add_argument("channel")
    s.set_defaults(func=_cmd_cutoff)

    s = sub.add_parser("binary", parents=[common], help="two pure states with overlap epsilon")
    s.add_argument("--epsilon", type=float, required=True)
    s.set_defaults(func=_cmd_binary)

    s = sub.add_parser("exponents", parents=[common], help="reliability bounds")
    s.add_argument("channel")
    s.add_argument("--rates", required=True, help="a,b,c or start:stop:count")
    s.add_argument("--budget", type=float)
    s.add_argument("--pin-prior", action="store_true", help="use the file prior as is")
    s.add_argument("--csv", action="store_true")
    s.set_defaults(func=_cmd_exponents)

    s = sub.add_parser("sim", parents=[common], help="random-coding Monte Carlo")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=_nonneg_int, default=0)
    s.add_argument("--decoder", choices=("pure_srm", "mixed_srm"), default="pure_srm")
    s.add_argument("--delta", type=float)
    s.add_argument("--epsilon", type=float, default=0.5,
                   help="overlap of the binary channel used when --channel is absent")
    s.add_argument("--channel")
    s.add_argument("--budget", type=float)
    s.add_argument("--mode", choices=("plain", "conditioned"), default="plain")
    s.add_argument("--jobs", type=int)
    s.add_argument("--per-trial", action="store_true", help="include every trial's error")
    s.set_defaults(func=_cmd_sim)

    s = sub.add_parser("gauss", parents=[common], help="Gaussian bosonic channels")
    s.add_argument("kind", choices=("mode", "multi", "wave", "broadband", "reliability"))
    s.add_argument("--N", type=float, default=0.0, help="noise quanta (mode)")
    s.add_argument("--E", type=float, required=True, help="signal energy budget")
    s.add_argument("--P", type=float, default=0.0, help="noise power (broadband)")
    s.add_argument("--modes", help="omega:N,omega:N,... (multi)")
    s.add_argument("--spectrum", default="flat:0", help="flat:N0, planck:thetaP or CSV (wave)")
    s.add_argument("--band", type=float, nargs=2, metavar=("LOW", "HIGH"))
    s.add_argument("--rates", help="a,b,c or start:stop:count (reliability)")
    s.add_argument("--csv", action="store_true")
    s.set_defaults(func=_cmd_gauss)
    return p


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    scale = BIT if args.log_base == "bits" else NAT
    overrides = {} if args.max_dim is None else {"max_dim": args.max_dim}
    try:
        if args.command == "gauss" and args.kind in ("multi",) and not args.modes:
            raise InputError("gauss multi needs --modes")
        if args.command == "gauss" and args.kind == "reliability" and not args.rates:
            raise InputError("gauss reliability needs --rates")
        with config_context(**overrides):
            text = args.func(args, scale)
    except ValidationError as exc:
        print(f"holevo: input error: {exc}", file=stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"holevo: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"holevo: cannot write {args.output}: {exc.strerror}", file=stderr)
            return EXIT_INPUT
    else:
        stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
