"""Command-line interface.

Subcommands: train, reconstruct, linkpred, classify, depth-sweep, gradcheck,
export-embeddings.  Input is either a dataset manifest (--manifest) or a
synthetic spec (--synthetic "n=200,communities=2,..." or "default"); exactly
one must be given.  A key=value config file (--config) supplies defaults;
explicit flags win.  Exit codes: 0 success, 1 runtime failure, 2 bad
configuration.
"""

import argparse
import sys
from dataclasses import replace

from .data_io import (
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    read_manifest,
    save_embeddings,
)
from .embedding import extract_embeddings
from .errors import AsymGCNError
from .evaluation import (
    depth_sweep,
    run_classification,
    run_link_prediction,
    run_reconstruction,
)
from .model import (
    ModelConfig,
    check_gradients,
    load_checkpoint,
    save_checkpoint,
    train,
)


class ConfigError(Exception):
    """Bad flags/config: maps to exit code 2."""


_SYNTH_FIELDS = {
    "n": ("n", int),
    "communities": ("num_communities", int),
    "intra": ("p_intra", float),
    "inter": ("p_inter", float),
    "features": ("num_features", int),
    "signal": ("signal", float),
    "noise": ("attr_noise", float),
    "spread": ("degree_spread", float),
    "seed": ("seed", int),
}


def parse_synthetic_spec(text: str) -> SyntheticSpec:
    """`key=value,...` with keys n, communities, intra, inter, features,
    signal, spread, seed; bare "default" gives the default fixture."""
    text = text.strip()
    if text in ("", "default"):
        return SyntheticSpec()
    spec = SyntheticSpec()
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"--synthetic: expected key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _SYNTH_FIELDS:
            raise ConfigError(
                f"--synthetic: unknown key {key!r} "
                f"(known: {', '.join(sorted(_SYNTH_FIELDS))})")
        field, conv = _SYNTH_FIELDS[key]
        try:
            spec = replace(spec, **{field: conv(value.strip())})
        except ValueError:
            raise ConfigError(f"--synthetic: bad value for {key}: {value!r}")
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(f"--synthetic: {exc}")
    return spec


# dest -> converter used when a config file supplies the value
_COERCERS = {
    "layers": int, "dim": int, "lr": float, "epochs": int, "seed": int,
    "runs": int, "ratio": float, "train_frac": float, "tolerance": float,
    "normalize_adj": lambda v: str(v).lower() in ("1", "true", "yes"),
}


def _read_config_file(path) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                dest = key.strip().replace("-", "_")
                value = value.strip()
                conv = _COERCERS.get(dest)
                try:
                    values[dest] = conv(value) if conv else value
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad value {value!r}")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    return values


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


def _build_parser(defaults):
    d = defaults.get

    parser = argparse.ArgumentParser(
        prog="asymgcn",
        description="Asymmetric attributed network embedding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("--config", help="key=value config file (flags win)")
        p.add_argument("--manifest", default=d("manifest"),
                       help="dataset manifest path")
        p.add_argument("--synthetic", default=d("synthetic"),
                       help='synthetic spec, e.g. "n=200,communities=2" or "default"')

    def add_model(p, layers_default):
        p.add_argument("--layers", type=int,
                       default=d("layers", layers_default),
                       help="number of convolutional layers l")
        p.add_argument("--dim", type=int, default=d("dim", 100),
                       help="hidden width / embedding half-width d")
        p.add_argument("--lr", type=float, default=d("lr", 0.01))
        p.add_argument("--epochs", type=int, default=d("epochs", 200))
        p.add_argument("--seed", type=int, default=d("seed", 0))
        p.add_argument("--normalize-adj", action="store_true",
                       default=d("normalize_adj", False),
                       help="row-normalize the augmented adjacency")

    def add_runs(p):
        p.add_argument("--runs", type=int, default=d("runs", 10))
        p.add_argument("--seeds", default=d("seeds"),
                       help="comma-separated per-run seeds (length = runs)")
        p.add_argument("--out-csv", default=d("out_csv"),
                       help="write the per-run metric rows here")

    p = sub.add_parser("train", help="train and export checkpoint/embeddings")
    add_input(p)
    add_model(p, 2)
    p.add_argument("--out-checkpoint", default=d("out_checkpoint", "checkpoint.npz"))
    p.add_argument("--out-embeddings", default=d("out_embeddings", "embeddings.txt"))

    p = sub.add_parser("reconstruct", help="network reconstruction Pr@k")
    add_input(p)
    add_model(p, 2)
    add_runs(p)
    p.add_argument("--k", default=d("k", "200"),
                   help="comma-separated k values for Pr@k")

    p = sub.add_parser("linkpred", help="link prediction with edge holdout")
    add_input(p)
    add_model(p, 2)
    add_runs(p)
    p.add_argument("--k", default=d("k", "100"))
    p.add_argument("--ratio", type=float, default=d("ratio", 0.3),
                   help="held-out edge fraction")

    p = sub.add_parser("classify", help="node classification over embeddings")
    add_input(p)
    add_model(p, 1)
    add_runs(p)
    p.add_argument("--train-frac", type=float, default=d("train_frac", 0.8))

    p = sub.add_parser("depth-sweep", help="repeat a task across depths")
    add_input(p)
    add_model(p, 1)
    add_runs(p)
    p.add_argument("--depths", default=d("depths", "1,2,3,4,5,6,7,8,9,10"))
    p.add_argument("--task", default=d("task", "classify"),
                   choices=["classify", "reconstruct", "linkpred"])
    p.add_argument("--k", default=d("k", "200"))
    p.add_argument("--ratio", type=float, default=d("ratio", 0.3))
    p.add_argument("--train-frac", type=float, default=d("train_frac", 0.8))

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    add_input(p)
    add_model(p, 2)
    # small hidden width (the check is O(params)) and a seed verified to keep
    # softmax probabilities off the log clamp, where finite differences of the
    # clamped loss would disagree with the analytic gradients by design
    p.set_defaults(dim=d("dim", 5), seed=d("seed", 5))
    p.add_argument("--tolerance", type=float, default=d("tolerance", 1e-4))

    p = sub.add_parser("export-embeddings",
                       help="re-export embeddings from a checkpoint")
    add_input(p)
    p.add_argument("--checkpoint", required=d("checkpoint") is None,
                   default=d("checkpoint"))
    p.add_argument("--out-embeddings",
                   default=d("out_embeddings", "embeddings.txt"))

    return parser


def _load_input(args):
    manifest = getattr(args, "manifest", None)
    synthetic = getattr(args, "synthetic", None)
    if (manifest is None) == (synthetic is None):
        raise ConfigError("exactly one of --manifest or --synthetic is required")
    if manifest is not None:
        return load_dataset(read_manifest(manifest))
    return generate_synthetic(parse_synthetic_spec(synthetic))


def _model_config(args, g):
    try:
        return ModelConfig(
            num_conv_layers=args.layers,
            hidden_dim=args.dim,
            num_classes=g.num_classes,
            learning_rate=args.lr,
            epochs=args.epochs,
            seed=args.seed,
            normalize_adjacency=args.normalize_adj,
        ).validate()
    except ValueError as exc:
        raise ConfigError(str(exc))


def _seed_list(args):
    if getattr(args, "seeds", None):
        seeds = _int_list(args.seeds)
        if len(seeds) != args.runs:
            raise ConfigError(
                f"--seeds lists {len(seeds)} values but --runs is {args.runs}")
        return seeds
    return None


def _emit(report, args):
    print(report.format_table())
    if getattr(args, "out_csv", None):
        report.to_csv(args.out_csv)
        print(f"wrote {args.out_csv}")


def _cmd_train(args):
    g = _load_input(args)
    cfg = _model_config(args, g)
    params, history = train(g, cfg)
    loss_s, loss_t = history[-1]
    print(f"final losses: L_S={loss_s:.6f} L_T={loss_t:.6f} (seed={cfg.seed})")
    save_checkpoint(args.out_checkpoint, params, cfg)
    print(f"wrote {args.out_checkpoint}")
    Z = extract_embeddings(params, g, cfg.normalize_adjacency)
    save_embeddings(Z, args.out_embeddings)
    print(f"wrote {args.out_embeddings}")
    return 0


def _cmd_reconstruct(args):
    g = _load_input(args)
    cfg = _model_config(args, g)
    report = run_reconstruction(g, cfg, _int_list(args.k), runs=args.runs,
                                seeds=_seed_list(args))
    _emit(report, args)
    return 0


def _cmd_linkpred(args):
    g = _load_input(args)
    cfg = _model_config(args, g)
    report = run_link_prediction(g, cfg, ratio=args.ratio,
                                 k_values=_int_list(args.k), runs=args.runs,
                                 seeds=_seed_list(args))
    _emit(report, args)
    return 0


def _cmd_classify(args):
    g = _load_input(args)
    cfg = _model_config(args, g)
    report = run_classification(g, cfg, train_frac=args.train_frac,
                                runs=args.runs, seeds=_seed_list(args))
    _emit(report, args)
    return 0


def _cmd_depth_sweep(args):
    g = _load_input(args)
    cfg = _model_config(args, g)
    kwargs = {}
    if args.task == "reconstruct":
        kwargs["k_values"] = _int_list(args.k)
    elif args.task == "linkpred":
        kwargs["k_values"] = _int_list(args.k)
        kwargs["ratio"] = args.ratio
    else:
        kwargs["train_frac"] = args.train_frac
    report = depth_sweep(g, cfg, _int_list(args.depths), task=args.task,
                         runs=args.runs, seeds=_seed_list(args), **kwargs)
    _emit(report, args)
    return 0


GRADCHECK_FIXTURE = ("n=12,communities=3,intra=0.25,inter=0.08,features=6,"
                     "signal=0.3,noise=0.2,spread=0,seed=7")


def _cmd_gradcheck(args):
    if getattr(args, "manifest", None) is None and \
            getattr(args, "synthetic", None) is None:
        args.synthetic = GRADCHECK_FIXTURE
    g = _load_input(args)
    cfg = _model_config(args, g)
    report = check_gradients(g, cfg, tolerance=args.tolerance)
    status = "PASS" if report.passed else "FAIL"
    print(f"gradcheck {status}: max relative error {report.max_rel_error:.3e} "
          f"(tolerance {report.tolerance:g}, layers={cfg.num_conv_layers})")
    return 0 if report.passed else 1


def _cmd_export_embeddings(args):
    g = _load_input(args)
    params, cfg = load_checkpoint(args.checkpoint)
    Z = extract_embeddings(params, g, cfg.normalize_adjacency)
    save_embeddings(Z, args.out_embeddings)
    print(f"wrote {args.out_embeddings}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "reconstruct": _cmd_reconstruct,
    "linkpred": _cmd_linkpred,
    "classify": _cmd_classify,
    "depth-sweep": _cmd_depth_sweep,
    "gradcheck": _cmd_gradcheck,
    "export-embeddings": _cmd_export_embeddings,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)

    # first pass only fishes out --config so its values can become defaults
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    try:
        defaults = _read_config_file(known.config) if known.config else {}
        args = _build_parser(defaults).parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AsymGCNError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
