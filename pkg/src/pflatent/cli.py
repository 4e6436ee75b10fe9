"""Command-line entry point: ``pflatent <command> [--config FILE] [--flags]``.

Every option can also be given in a key=value config file (``--config``);
keys are the long flag names with dashes replaced by underscores. Flags
override the file, the file overrides built-in defaults, unknown keys are
an error.

Exit codes: 0 success, 2 partial generation, 3 shape/format error,
4 numerical failure, 5 configuration error, 6 missing input.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import formats
from .errors import (ConfigError, ContainerFormatError, DimensionMismatch, NonFiniteLoss,
                     NumericalBlowup)
from .metrics import (EvalReport, explained_variance_table, linear_extrapolation_baseline, mse,
                      persistence_baseline)
from .phasefield import SweepSpec, generate_dataset
from .reduce import (PCAStage, ae_loss, ae_train, compose_pipeline, fit_scaler, flatten_frames,
                     init_ae, pca_fit, symmetric_dims, unflatten_frames)
from .sequence import RolloutSpec, init_seq_model, predict, seq_loss, seq_train
from .spectral import GridSpec
from .training import TrainConfig

log = logging.getLogger("pflatent")

EXIT_OK, EXIT_PARTIAL, EXIT_SHAPE, EXIT_NUMERIC, EXIT_CONFIG, EXIT_MISSING = 0, 2, 3, 4, 5, 6

_TRAIN_OPTS = {
    "optimizer": (str, "adam", "adam or sgd_momentum"),
    "learning_rate": (float, 1e-3, "optimizer step size"),
    "batch_size": (int, 32, "minibatch size"),
    "max_epochs": (int, 200, "epoch limit"),
    "patience": (int, 10, "early-stopping patience in epochs"),
    "min_delta": (float, 1e-5, "minimum validation improvement that resets patience"),
    "validation_fraction": (float, 0.1, "fraction of rows held out for validation"),
    "seed": (int, 0, "seed for initialization, split and shuffling"),
}

COMMANDS = {
    "generate": {
        "out": (str, None, "output dataset directory"),
        "samples": (int, 100, "number of simulations"),
        "nx": (int, 64, "grid points along x (power of two)"),
        "ny": (int, 64, "grid points along y (power of two)"),
        "dt": (float, 0.01, "time step"),
        "steps": (int, 20000, "time steps per simulation"),
        "stride": (int, 200, "steps between stored frames"),
        "noise": (float, 0.05, "initial perturbation amplitude"),
        "barrier_a": (float, 1.0, "double-well barrier height A"),
        "potential": (str, "standard_double_well", "standard_double_well or as_written"),
        "x0_min": (float, 0.25, ""), "x0_max": (float, 0.75, ""),
        "mobility_min": (float, 0.8, ""), "mobility_max": (float, 2.2, ""),
        "kappa_min": (float, 0.25, ""), "kappa_max": (float, 0.75, ""),
        "seed": (int, 0, "base seed of the sweep"),
        "jobs": (int, 0, "worker processes (0 = logical cores)"),
    },
    "train-ae": {
        "data": (str, None, "frames [S,T,ny,nx] or codes [S,T,D] / [N,D] container"),
        "out": (str, None, "model directory"),
        "code": (int, 256, "code (latent) width"),
        "hidden_layers": (int, 0, "hidden layers on each side of the code"),
        "hidden_activation": (str, "relu", "activation of hidden and code layers"),
        "output_activation": (str, "sigmoid", "activation of the output layer"),
        "channels": (int, 1, "1, or 3 to replicate each pixel into RGB"),
        "timings": (bool, False, "add wall-clock timings to the report"),
        **_TRAIN_OPTS,
    },
    "encode": {
        "model": (str, None, "stage-1 autoencoder directory"),
        "data": (str, None, "frames container"),
        "out": (str, None, "codes container [S,T,code]"),
    },
    "fit-pca": {
        "data": (str, None, "codes container"),
        "out": (str, None, "PCA model directory"),
        "components": (int, 250, "number of principal components"),
        "scaler": (str, "minmax", "minmax or zscore, applied before PCA"),
    },
    "transform": {
        "model": (str, None, "stage-2 model directory (PCA or AE)"),
        "data": (str, None, "stage-1 codes container"),
        "out": (str, None, "latent container"),
        "inverse": (bool, False, "map latent codes back to stage-1 codes"),
    },
    "train-seq": {
        "latent": (str, None, "latent container [S,T,L]"),
        "manifest": (str, None, "dataset manifest (supplies x0, M, kappa)"),
        "out": (str, None, "sequence model directory"),
        "cell": (str, "lstm", "lstm or gru"),
        "layers": (int, 2, "stacked recurrent layers"),
        "hidden": (int, 500, "units per layer"),
        "horizon": (int, 5, "frames predicted"),
        "context": (int, 0, "frames consumed (0 = T - horizon)"),
        "stride_policy": (str, "all", "all or even_indices"),
        "differences": (bool, False, "model frame-to-frame latent increments"),
        "residual": (bool, False, "head predicts an increment over the current input"),
        "scaler": (str, "minmax", "minmax or zscore, applied to the modelled series"),
        "select": (str, "", "sample range start:stop used for training"),
        "timings": (bool, False, "add wall-clock timings to the report"),
        **_TRAIN_OPTS,
    },
    "predict": {
        "model": (str, None, "sequence model directory"),
        "latent": (str, None, "latent container [S,T,L]"),
        "manifest": (str, None, "dataset manifest"),
        "out": (str, None, "predicted latent frames [S,k,L]"),
        "horizon": (int, 0, "frames predicted (0 = model default)"),
        "context": (int, -1, "frames consumed (-1 = model default, 0 = T - horizon)"),
        "select": (str, "", "sample range start:stop"),
    },
    "decode": {
        "stage1": (str, None, "stage-1 autoencoder directory"),
        "stage2": (str, None, "stage-2 directory (PCA or AE)"),
        "latent": (str, None, "latent container [..., L]"),
        "out": (str, None, "decoded frames container"),
        "reference": (str, "", "optional frames container to score against"),
        "no_clamp": (bool, False, "skip clipping decoded values to [0, 1]"),
    },
    "render": {
        "data": (str, None, "frames container [..., ny, nx]"),
        "out": (str, None, "output directory"),
        "channels": (int, 1, "1 = PGM, 3 = PPM"),
        "select": (str, "", "range start:stop over the flattened leading axes"),
    },
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="pflatent", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file with option values")
        for key, (typ, default, help_) in opts.items():
            flag = "--" + key.replace("_", "-")
            shown = "" if default is None else f" (default: {default})"
            if typ is bool:
                p.add_argument(flag, dest=key, action="store_const", const=True,
                               default=None, help=help_ + shown)
            else:
                p.add_argument(flag, dest=key, type=typ, default=None, help=help_ + shown)
    return parser


def _coerce(typ, value: str, key: str):
    try:
        if typ is bool:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        return typ(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """defaults < config file < flags."""
    spec = COMMANDS[command]
    opts = {k: v[1] for k, v in spec.items()}
    if args.config:
        try:
            raw = formats.parse_kv(Path(args.config).read_text(), args.config)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        for k, v in raw.items():
            if k not in spec:
                raise ConfigError(f"unknown config key {k!r} for {command}")
            opts[k] = _coerce(spec[k][0], v, k)
    for k in spec:
        v = getattr(args, k)
        if v is not None:
            opts[k] = v
    missing = [k for k, v in opts.items() if v is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return opts


def _train_config(o) -> TrainConfig:
    try:
        return TrainConfig(**{k: o[k] for k in _TRAIN_OPTS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _select(spec: str, n: int) -> slice:
    if not spec:
        return slice(0, n)
    try:
        a, b = spec.split(":")
        s = slice(int(a) if a else 0, int(b) if b else n)
    except ValueError:
        raise ConfigError(f"bad range {spec!r}, expected start:stop") from None
    if not 0 <= s.start < s.stop <= n:
        raise ConfigError(f"range {spec} outside 0:{n}")
    return s


def _load(path) -> np.ndarray:
    if not Path(path).exists():
        raise FileNotFoundError(path)
    x = formats.read_container(path).astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise NumericalBlowup(f"{path} contains non-finite values")
    return x


def _write_report(path, report: EvalReport):
    formats.atomic_write_text(path, report.emit())


# -- commands --------------------------------------------------------------

def cmd_generate(o) -> int:
    out = Path(o["out"])
    for n in (o["nx"], o["ny"]):
        if n < 2 or n & (n - 1):
            raise ConfigError("nx and ny must be powers of two")
    try:
        sweep = SweepSpec(
            n_samples=o["samples"], grid=GridSpec(o["nx"], o["ny"]),
            x0_range=(o["x0_min"], o["x0_max"]),
            mobility_range=(o["mobility_min"], o["mobility_max"]),
            kappa_range=(o["kappa_min"], o["kappa_max"]), base_seed=o["seed"],
            dt=o["dt"], n_steps=o["steps"], snapshot_stride=o["stride"],
            noise_amp=o["noise"], barrier_a=o["barrier_a"], potential_form=o["potential"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    settings = {k: o[k] for k in COMMANDS["generate"] if k not in ("out", "jobs")}
    shard_dir = out / "samples"
    shard_dir.mkdir(parents=True, exist_ok=True)
    settings_text = formats.format_kv(settings)
    settings_path = out / "settings.txt"
    if settings_path.exists() and settings_path.read_text() != settings_text:
        raise ConfigError(f"{out} holds a dataset generated with different settings")
    formats.atomic_write_text(settings_path, settings_text)

    def shard(i, status):
        return shard_dir / f"sample_{i:06d}.{status}.pfds"

    done = {i for i in range(sweep.n_samples) if shard(i, "ok").exists()}
    failed_before = {i for i in range(sweep.n_samples) if shard(i, "failed").exists()}
    skip = frozenset(done | failed_before)
    if skip:
        log.info("resuming: %d sample(s) already complete", len(skip))

    def on_result(rec, traj):
        if traj is not None:
            formats.write_container(shard(rec.sample_id, "ok"), traj.frames)
        else:
            formats.atomic_write_bytes(shard(rec.sample_id, "failed"), b"")

    jobs = o["jobs"] or os.cpu_count() or 1
    _, records = generate_dataset(sweep, jobs=jobs, skip=skip, on_result=on_result)
    for r in records:
        if r.sample_id in skip:
            r.status = "ok" if r.sample_id in done else "failed"
    ok = [r.sample_id for r in records if r.status == "ok"]
    frames = [formats.read_container(shard(i, "ok")) for i in ok]
    shape = (len(ok), sweep.n_steps // sweep.snapshot_stride, o["ny"], o["nx"])
    data = np.stack(frames) if frames else np.zeros(shape, dtype=np.float32)
    formats.write_container(out / "frames.pfds", data)
    formats.write_manifest(out / "manifest.txt", records, settings)
    rep = EvalReport()
    rep.set("generate", "samples", sweep.n_samples).set("generate", "ok", len(ok))
    rep.set("generate", "failed", sweep.n_samples - len(ok))
    rep.set("generate", "dims", "x".join(str(d) for d in data.shape))
    _write_report(out / "report.txt", rep)
    return EXIT_OK if len(ok) == sweep.n_samples else EXIT_PARTIAL


def _rows_and_shape(x, channels):
    """Frames [S,T,ny,nx] -> rows; codes [S,T,D] or [N,D] -> rows."""
    if x.ndim == 4:
        return flatten_frames(x, channels), x.shape[2:], x.shape[:2]
    if x.ndim in (2, 3):
        if channels != 1:
            raise ConfigError("channels=3 applies to frame containers only")
        return x.reshape(-1, x.shape[-1]), None, x.shape[:-1]
    raise DimensionMismatch(f"cannot train on a rank-{x.ndim} container")


def cmd_train_ae(o) -> int:
    t0 = time.perf_counter()
    x = _load(o["data"])
    rows, frame_shape, _ = _rows_and_shape(x, o["channels"])
    dims, code_index = symmetric_dims(rows.shape[1], o["code"], o["hidden_layers"])
    cfg = _train_config(o)
    try:
        model = init_ae(dims, code_index, o["hidden_activation"], o["output_activation"], cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    model, hist = ae_train(rows, model, cfg, verbose=True)
    out = Path(o["out"])
    extra = {}
    if frame_shape is not None:
        extra = {"frame_shape": f"{frame_shape[0]},{frame_shape[1]}", "channels": o["channels"]}
    formats.save_ae(out, model, extra)
    loaded = formats.load_ae(out)
    rep = EvalReport()
    rep.set("model", "layer_dims", ",".join(map(str, model.layer_dims)))
    rep.set("model", "reduction_ratio", rows.shape[1] / model.code_dim)
    rep.set("mse", "best_epoch", hist.best_epoch)
    rep.set("mse", "best_validation", hist.best_val)
    rep.set("mse", "all_rows_saved_model", ae_loss(loaded, rows))
    for e, (tr, va) in enumerate(zip(hist.train_loss, hist.val_loss)):
        rep.set("history", f"epoch{e}", f"{tr!r},{va!r}")
    if o["timings"]:
        rep.set("timings", "seconds", time.perf_counter() - t0)
    _write_report(out / "report.txt", rep)
    return EXIT_OK


def cmd_encode(o) -> int:
    model = formats.load_ae(o["model"])
    hdr = formats.read_model_header(o["model"])
    channels = int(hdr.get("channels", 1))
    x = _load(o["data"])
    rows, _, lead = _rows_and_shape(x, channels)
    if rows.shape[1] != model.input_dim:
        raise DimensionMismatch(f"model expects width {model.input_dim}, data has {rows.shape[1]}")
    codes = model.encode(rows).reshape(lead + (model.code_dim,))
    formats.write_container(o["out"], codes)
    return EXIT_OK


def cmd_fit_pca(o) -> int:
    x = _load(o["data"])
    rows = x.reshape(-1, x.shape[-1])
    try:
        scaler = fit_scaler(rows, o["scaler"])
        pca = pca_fit(scaler.apply(rows), o["components"])
    except DimensionMismatch:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    stage = PCAStage(scaler, pca)
    formats.save_pca_stage(o["out"], stage)
    rep = EvalReport()
    rep.set("pca", "n_components", pca.n_components)
    rep.set("pca", "n_features", pca.n_features)
    rep.set("pca", "scaler", o["scaler"])
    loaded = formats.load_pca_stage(o["out"])
    rep.set("pca", "reconstruction_mse", mse(rows, loaded.decode(loaded.encode(rows))))
    for k, v in enumerate(explained_variance_table(pca), start=1):
        rep.set("explained_variance", k, float(v))
    _write_report(Path(o["out"]) / "report.txt", rep)
    return EXIT_OK


def cmd_transform(o) -> int:
    stage = formats.load_stage2(o["model"])
    x = _load(o["data"])
    width = stage.code_dim if o["inverse"] else stage.input_dim
    if x.shape[-1] != width:
        raise DimensionMismatch(f"model expects width {width}, data has {x.shape[-1]}")
    rows = x.reshape(-1, width)
    y = stage.decode(rows) if o["inverse"] else stage.encode(rows)
    formats.write_container(o["out"], y.reshape(x.shape[:-1] + (y.shape[-1],)))
    return EXIT_OK


def _statics(manifest_path, n_samples):
    _, rows = formats.read_manifest(manifest_path)
    ok = [r for r in rows if r["status"] == "ok"]
    if len(ok) != n_samples:
        raise DimensionMismatch(
            f"manifest lists {len(ok)} successful samples, latent container has {n_samples}")
    return np.array([[r["x0"], r["mobility"], r["kappa"]] for r in ok])


def _features(latent_scaled, statics):
    s, t, _ = latent_scaled.shape
    return np.concatenate([latent_scaled, np.broadcast_to(statics[:, None, :], (s, t, 3))], axis=2)


def _series(z, stride_policy, differences):
    """The sequence the model sees: optionally halved in time, optionally differenced."""
    if stride_policy not in ("all", "even_indices"):
        raise ConfigError(f"unknown stride_policy {stride_policy!r}")
    zs = z[:, ::2] if stride_policy == "even_indices" else z
    return zs, (np.diff(zs, axis=1) if differences else zs)


def cmd_train_seq(o) -> int:
    t0 = time.perf_counter()
    z = _load(o["latent"])
    if z.ndim != 3:
        raise DimensionMismatch("latent container must be [S,T,L]")
    statics = _statics(o["manifest"], z.shape[0])
    sel = _select(o["select"], z.shape[0])
    z, statics = z[sel], statics[sel]
    _, series = _series(z, o["stride_policy"], o["differences"])
    try:
        scaler = fit_scaler(series.reshape(-1, series.shape[-1]), o["scaler"])
        # the time axis is already subsampled by _series
        spec = RolloutSpec(o["horizon"], o["context"] or None, "all")
        model = init_seq_model(o["cell"], z.shape[-1], o["hidden"], o["layers"], o["seed"],
                               residual=o["residual"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    feats = _features(scaler.apply(series), statics)
    cfg = _train_config(o)
    model, hist = seq_train(feats, model, cfg, spec, verbose=True)
    extra = {"horizon": spec.horizon, "context": o["context"], "stride_policy": o["stride_policy"],
             "differences": int(o["differences"])}
    out = Path(o["out"])
    formats.save_seq(out, model, scaler, extra)
    rep = EvalReport()
    rep.set("model", "cell_kind", model.cell_kind).set("model", "n_layers", model.n_layers)
    rep.set("model", "hidden_size", model.hidden_size).set("model", "horizon", spec.horizon)
    rep.set("loss", "best_epoch", hist.best_epoch)
    rep.set("loss", "best_validation", hist.best_val)
    for e, (tr, va) in enumerate(zip(hist.train_loss, hist.val_loss)):
        rep.set("history", f"epoch{e}", f"{tr!r},{va!r}")
    if o["timings"]:
        rep.set("timings", "seconds", time.perf_counter() - t0)
    _write_report(out / "report.txt", rep)
    return EXIT_OK


def cmd_predict(o) -> int:
    model, scaler, hdr = formats.load_seq(o["model"])
    z = _load(o["latent"])
    if z.ndim != 3 or z.shape[-1] != model.latent_dim:
        raise DimensionMismatch(f"latent container must be [S,T,{model.latent_dim}]")
    statics = _statics(o["manifest"], z.shape[0])
    sel = _select(o["select"], z.shape[0])
    z, statics = z[sel], statics[sel]
    horizon = o["horizon"] or int(hdr["horizon"])
    context = int(hdr["context"]) if o["context"] < 0 else o["context"]
    differences = hdr.get("differences", "0") == "1"
    zs, series = _series(z, hdr["stride_policy"], differences)
    spec = RolloutSpec(horizon, context or None, "all")
    c = spec.context_for(series.shape[1])
    feats = _features(scaler.apply(series), statics)
    pred = scaler.invert(predict(model, feats, spec))
    if differences:
        # increments d_t = z_{t+1} - z_t; the last known frame is z_c
        pred = zs[:, c:c + 1] + np.cumsum(pred, axis=1)
        c += 1
    formats.write_container(o["out"], pred)

    target = zs[:, c:c + horizon]
    base = persistence_baseline(zs, c, horizon)
    stored = formats.read_container(o["out"]).astype(np.float64)
    rep = EvalReport()
    rep.set("predict", "samples", z.shape[0]).set("predict", "horizon", horizon)
    rep.set("predict", "context", c)
    rep.set("predict", "model_mse", mse(stored, target))
    rep.set("predict", "persistence_mse", mse(base, target))
    if c >= 2:
        rep.set("predict", "linear_extrapolation_mse",
                mse(linear_extrapolation_baseline(zs, c, horizon), target))
    rep.set("predict", "model_mse_scaled", seq_loss(model, feats, spec))
    for j in range(horizon):
        rep.set("horizon_mse", j + 1, mse(stored[:, j], target[:, j]))
    _write_report(Path(o["out"]).with_suffix(".report.txt"), rep)
    return EXIT_OK


def cmd_decode(o) -> int:
    stage1 = formats.load_ae(o["stage1"])
    hdr = formats.read_model_header(o["stage1"])
    stage2 = formats.load_stage2(o["stage2"])
    pipe = compose_pipeline(stage1, stage2, clamp=not o["no_clamp"])
    z = _load(o["latent"])
    if z.shape[-1] != pipe.code_dim:
        raise DimensionMismatch(f"pipeline code width {pipe.code_dim}, latent has {z.shape[-1]}")
    if "frame_shape" not in hdr:
        raise DimensionMismatch("stage-1 model was not trained on frames")
    shape = tuple(int(v) for v in hdr["frame_shape"].split(","))
    channels = int(hdr.get("channels", 1))
    rows = pipe.decode(z.reshape(-1, z.shape[-1]))
    frames = unflatten_frames(rows, shape, channels).reshape(z.shape[:-1] + shape)
    formats.write_container(o["out"], frames)
    rep = EvalReport()
    rep.set("pipeline", "input_dim", pipe.input_dim).set("pipeline", "code_dim", pipe.code_dim)
    rep.set("pipeline", "reduction_ratio", pipe.reduction_ratio)
    if o["reference"]:
        ref = _load(o["reference"])
        stored = formats.read_container(o["out"]).astype(np.float64)
        if ref.shape != stored.shape:
            raise DimensionMismatch(f"reference {ref.shape} vs decoded {stored.shape}")
        rep.set("mse", "mean", mse(stored, ref))
        # per-stage accounting on the reference frames, measured in image space
        ref_rows = flatten_frames(ref.reshape((-1,) + shape), channels)
        for k, v in pipe.stage_residuals(ref_rows).items():
            rep.set("residuals", k, v)
        lead = stored.reshape((-1,) + shape)
        ref_lead = ref.reshape((-1,) + shape)
        idx = np.ndindex(*stored.shape[:-2])
        for n, i in enumerate(idx):
            key = "_".join(str(v) for v in i)
            rep.set("frame_mse", key, mse(lead[n], ref_lead[n]))
    _write_report(Path(o["out"]).with_suffix(".report.txt"), rep)
    return EXIT_OK


def cmd_render(o) -> int:
    x = _load(o["data"])
    if x.ndim < 2:
        raise DimensionMismatch("need at least a 2-D frame")
    lead = x.shape[:-2]
    flat = x.reshape((-1,) + x.shape[-2:])
    sel = _select(o["select"], flat.shape[0])
    ext = "pgm" if o["channels"] == 1 else "ppm"
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    for n in range(sel.start, sel.stop):
        idx = np.unravel_index(n, lead) if lead else ()
        name = "_".join(f"{v:04d}" for v in idx) or "frame"
        formats.write_pnm(out / f"{name}.{ext}", flat[n], o["channels"])
    return EXIT_OK


HANDLERS = {
    "generate": cmd_generate, "train-ae": cmd_train_ae, "encode": cmd_encode,
    "fit-pca": cmd_fit_pca, "transform": cmd_transform, "train-seq": cmd_train_seq,
    "predict": cmd_predict, "decode": cmd_decode, "render": cmd_render,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args.command, args)
        return HANDLERS[args.command](opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (DimensionMismatch, ContainerFormatError) as exc:
        print(f"shape error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (NumericalBlowup, NonFiniteLoss) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
