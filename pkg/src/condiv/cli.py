"""Command-line front-end for the divergence library.

Six subcommands expose the pipelines: ``divergence`` (one value from two
CSV files), ``power`` (rejection-rate matrices over the simulation sets),
``cluster`` (time-series clustering), ``causal`` (direction test),
``rl`` (reward-free exploration runs), and ``bench`` (empirical scaling
of the estimators).

Conventions shared by every command:

- ``--seed`` makes the run bit-reproducible; ``--out`` picks the output
  directory (created if missing).
- Outputs are written once, atomically, at the end of the run, and a
  ``manifest.json`` lands next to them recording the command, resolved
  parameters, seed, artifact names, and wall-clock duration. JSON keys are
  sorted so reruns diff cleanly.
- Commands that produce delimited output also render matplotlib figures
  alongside it; ``--no-figures`` turns that off.
- Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
  malformed input, reported with file and line), 3 numerical failure
  (non-finite result or disjoint kernel support).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .causal import (
    HENON_EMBEDDING,
    NLVAR3_EMBEDDING,
    EmbeddingSpec,
    causal_test,
    henon_generate,
    nlvar3_generate,
)
from .divergences import (
    CmmdConfig,
    DisjointSupportError,
    PairedDataset,
    conditional_cs,
    conditional_kl,
    conditional_mmd,
    conditional_von_neumann,
    cs_divergence,
    kl_knn,
    mmd,
)
from .envs import maze_env, mountain_car_env, pendulum_env
from .kernels import median_bandwidth
from .rl import (
    DtgConfig,
    occupancy_grid,
    log_probabilities,
    run_dtg,
    run_qlearning,
    run_random,
    visitation_entropy,
)
from .stats import PermutationConfig, permutation_test, power_matrix, resolve_measure
from .timeseries import (
    ar_collection,
    kmedoids,
    load_ucr,
    pairwise_matrix,
    nmi,
    spectral_cluster,
    to_affinity,
)

__all__ = ["RunManifest", "main"]


class UsageError(Exception):
    """Bad flags or flag combinations; exit code 1."""


class DataError(Exception):
    """Unreadable or malformed input data; exit code 2."""


class NumericalError(Exception):
    """The computation produced no usable number; exit code 3."""


@dataclass(frozen=True)
class RunManifest:
    """What a run did and where it put things.

    ``parameters`` holds the resolved values actually used (defaults
    filled in, widths resolved), so re-running the recorded command line
    reproduces the artifacts bit-for-bit up to float formatting.
    """

    command: str
    parameters: dict
    seed: int
    artifacts: list
    duration_seconds: float

    def to_json(self) -> str:
        return json.dumps(
            dataclasses.asdict(self), sort_keys=True, indent=2, default=str
        )


# ---------------------------------------------------------------- plumbing


def _write_text(path: Path, text: str) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _write_json(path: Path, payload) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    writer.writerows(rows)
    _write_text(path, buf.getvalue())


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(out, args, parameters, artifacts, started) -> int:
    manifest = RunManifest(
        command=args.command,
        parameters=parameters,
        seed=args.seed,
        artifacts=sorted(str(a) for a in artifacts),
        duration_seconds=round(time.perf_counter() - started, 3),
    )
    _write_text(out / "manifest.json", manifest.to_json() + "\n")
    return 0


def _parse_cols(spec: str, flag: str) -> list[int]:
    """Column list: comma-separated indices and inclusive ``a..b`` ranges."""
    cols: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        try:
            if ".." in part:
                lo, hi = (int(p) for p in part.split("..", 1))
                if hi < lo:
                    raise UsageError(f"{flag}: empty range {part!r}")
                cols.extend(range(lo, hi + 1))
            else:
                cols.append(int(part))
        except ValueError:
            raise UsageError(f"{flag}: cannot parse column spec {part!r}") from None
    if any(c < 0 for c in cols):
        raise UsageError(f"{flag}: negative column index in {spec!r}")
    if len(set(cols)) != len(cols):
        raise UsageError(f"{flag}: duplicate column in {spec!r}")
    return cols


def _load_table(path, delimiter: str, header: bool) -> np.ndarray:
    """Numeric CSV as a 2-D array; malformed cells name the file and line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror or exc})") from None
    rows: list[list[float]] = []
    width = None
    for lineno, record in enumerate(
        csv.reader(io.StringIO(text), delimiter=delimiter), start=1
    ):
        if header and lineno == 1:
            continue
        if not record or all(not field.strip() for field in record):
            continue
        try:
            values = [float(field) for field in record]
        except ValueError:
            bad = next(f for f in record if not _is_float(f))
            raise DataError(
                f"{path}, line {lineno}: non-numeric field {bad!r}"
            ) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataError(
                f"{path}, line {lineno}: expected {width} fields, "
                f"got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def _is_float(field: str) -> bool:
    try:
        float(field)
        return True
    except ValueError:
        return False


def _take_cols(table: np.ndarray, cols: list[int], path, flag: str) -> np.ndarray:
    if max(cols) >= table.shape[1]:
        raise DataError(
            f"{path}: {flag} asks for column {max(cols)}, file has "
            f"{table.shape[1]} columns"
        )
    return table[:, cols]


def _resolve_width(value, pooled, flag: str) -> float:
    """A float, or the median heuristic over the pooled rows."""
    if value is None or value == "median":
        return float(median_bandwidth(pooled))
    try:
        width = float(value)
    except ValueError:
        raise UsageError(
            f"{flag}: expected a number or 'median', got {value!r}"
        ) from None
    if width <= 0:
        raise UsageError(f"{flag}: width must be positive, got {width}")
    return width


# ------------------------------------------------------------- divergence

_MARGINAL_MEASURES = ("cs", "mmd", "kl")
_CONDITIONAL_MEASURES = ("cond-cs", "cond-mmd", "cond-kl", "cond-vn")


def _paired_from_table(table, x_cols, y_cols, path):
    try:
        return PairedDataset(
            _take_cols(table, x_cols, path, "--x-cols"),
            _take_cols(table, y_cols, path, "--y-cols"),
        )
    except DisjointSupportError:
        raise
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_divergence(args) -> int:
    started = time.perf_counter()
    measure = args.measure
    if measure not in _MARGINAL_MEASURES + _CONDITIONAL_MEASURES:
        raise UsageError(
            f"unknown measure {measure!r}; expected one of "
            f"{', '.join(_MARGINAL_MEASURES + _CONDITIONAL_MEASURES)}"
        )
    table_s = _load_table(args.file_s, args.delimiter, args.header)
    table_t = _load_table(args.file_t, args.delimiter, args.header)

    config: dict = {
        "files": [str(args.file_s), str(args.file_t)],
        "header": args.header,
    }
    p_value = significant = None
    pair_measure = None

    if measure in _CONDITIONAL_MEASURES:
        if args.x_cols is None or args.y_cols is None:
            raise UsageError(
                f"{measure} needs --x-cols and --y-cols to split each row "
                "into conditioning and response"
            )
        x_cols = _parse_cols(args.x_cols, "--x-cols")
        y_cols = _parse_cols(args.y_cols, "--y-cols")
        config["x_cols"], config["y_cols"] = x_cols, y_cols
        s = _paired_from_table(table_s, x_cols, y_cols, args.file_s)
        t = _paired_from_table(table_t, x_cols, y_cols, args.file_t)

        if measure == "cond-cs":
            width_x = _resolve_width(
                args.sigma, np.vstack([s.x, t.x]), "--sigma"
            )
            width_y = _resolve_width(
                args.sigma_y if args.sigma_y is not None else args.sigma,
                np.vstack([s.y, t.y]),
                "--sigma-y",
            )
            config["width_x"], config["width_y"] = width_x, width_y
            pair_measure = lambda a, b: conditional_cs(a, b, width_x, width_y)
        elif measure == "cond-mmd":
            pooled = np.vstack(
                [np.hstack([s.x, s.y]), np.hstack([t.x, t.y])]
            )
            width = _resolve_width(args.sigma, pooled, "--sigma")
            config["width"] = width
            cmmd_cfg = CmmdConfig(width=width)
            pair_measure = lambda a, b: conditional_mmd(a, b, cmmd_cfg)
        else:
            if args.sigma is not None or args.sigma_y is not None:
                raise UsageError(
                    f"{measure} resolves its scale internally; "
                    "--sigma/--sigma-y do not apply"
                )
            if measure == "cond-kl":
                pair_measure = conditional_kl
            else:
                pair_measure = conditional_von_neumann
        value = _run_numeric(measure, pair_measure, s, t)
        if args.permutations > 0:
            cfg = PermutationConfig(
                permutations=args.permutations,
                significance=args.significance,
                seed=args.seed,
            )
            p_value, significant = permutation_test(s, t, pair_measure, cfg)
            config["permutations"] = args.permutations
            config["significance"] = args.significance
    else:
        if args.x_cols is not None:
            raise UsageError(
                f"{measure} is a marginal measure over sample rows; "
                "use --y-cols (or no column flags) rather than --x-cols"
            )
        if args.permutations > 0:
            raise UsageError(
                "the permutation test pairs conditioning with response; "
                "it applies to conditional measures only"
            )
        if args.y_cols is not None:
            y_cols = _parse_cols(args.y_cols, "--y-cols")
            config["y_cols"] = y_cols
            ys = _take_cols(table_s, y_cols, args.file_s, "--y-cols")
            yt = _take_cols(table_t, y_cols, args.file_t, "--y-cols")
        else:
            ys, yt = table_s, table_t
        if not np.all(np.isfinite(ys)) or not np.all(np.isfinite(yt)):
            raise DataError("input contains non-finite values")
        if measure == "kl":
            if args.sigma is not None:
                raise UsageError(
                    "kl estimates through neighbor distances; --sigma "
                    "does not apply"
                )
            value = _run_numeric(measure, kl_knn, ys, yt)
        else:
            width = _resolve_width(args.sigma, np.vstack([ys, yt]), "--sigma")
            config["width"] = width
            fn = cs_divergence if measure == "cs" else mmd
            value = _run_numeric(measure, lambda a, b: fn(a, b, width), ys, yt)

    out = _out_dir(args)
    payload = {"measure": measure, "value": value, "config": config}
    if p_value is not None:
        payload["p_value"] = p_value
        payload["significant"] = bool(significant)
    _write_json(out / "divergence.json", payload)

    print(f"{measure}: {value:.6g}")
    if p_value is not None:
        verdict = "significant" if significant else "not significant"
        print(f"permutation p-value: {p_value:.4g} ({verdict})")
    params = dict(config, measure=measure)
    return _finish(out, args, params, ["divergence.json"], started)


def _run_numeric(name, fn, a, b) -> float:
    """Evaluate one divergence, mapping failure modes onto exit codes."""
    try:
        value = float(fn(a, b))
    except DisjointSupportError as exc:
        raise NumericalError(f"{name}: {exc}") from None
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from None
    if not np.isfinite(value):
        raise NumericalError(f"{name} returned a non-finite value ({value})")
    return value


# ------------------------------------------------------------------ power


def cmd_power(args) -> int:
    started = time.perf_counter()
    for name in args.measure:
        try:
            resolve_measure(name)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    set_ids = tuple(args.sets.split(","))
    out = _out_dir(args)
    cfg = PermutationConfig(
        permutations=args.permutations,
        significance=args.significance,
        seed=args.seed,
    )

    artifacts = []
    summary = {}
    for name in args.measure:
        pm = power_matrix(
            name,
            n=args.n,
            p=args.p,
            cfg=cfg,
            trials=args.trials,
            seed=args.seed,
            set_ids=set_ids,
        )
        csv_name = f"power_{name}.csv"
        _write_csv(
            out / csv_name,
            ["set"] + list(pm.set_ids),
            [
                [row_id] + [f"{v:.4f}" for v in pm.entries[i]]
                for i, row_id in enumerate(pm.set_ids)
            ],
        )
        artifacts.append(csv_name)
        summary[name] = {
            "set_ids": list(pm.set_ids),
            "entries": pm.entries.tolist(),
            "trials": pm.trials,
        }
        if not args.no_figures:
            from . import report

            fig_name = f"power_{name}.png"
            report.save_heatmap(
                pm.entries,
                out / fig_name,
                labels=list(pm.set_ids),
                title=f"rejection rate, {name}",
            )
            artifacts.append(fig_name)
        _print_power(pm)
    _write_json(out / "power.json", summary)
    artifacts.append("power.json")

    params = {
        "measures": list(args.measure),
        "n": args.n,
        "p": args.p,
        "permutations": args.permutations,
        "trials": args.trials,
        "significance": args.significance,
        "sets": list(set_ids),
    }
    return _finish(out, args, params, artifacts, started)


def _print_power(pm) -> None:
    print(f"{pm.measure_name} ({pm.trials} trials)")
    print("     " + "".join(f"{c:>7}" for c in pm.set_ids))
    for i, row_id in enumerate(pm.set_ids):
        cells = "".join(f"{v:7.2f}" for v in pm.entries[i])
        print(f"  {row_id:>3}{cells}")


# ---------------------------------------------------------------- cluster

_B_GRID = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


def _load_collection(args):
    if args.generate == "ar":
        return ar_collection(
            n_per_family=args.n_per_family,
            length=args.length,
            seed=args.seed,
        )
    if args.data is None:
        raise UsageError("either --data or --generate ar is required")
    if args.format == "ucr":
        try:
            return load_ucr(args.data)
        except OSError as exc:
            raise DataError(
                f"{args.data}: cannot read ({exc.strerror or exc})"
            ) from None
        except ValueError as exc:
            raise DataError(f"{args.data}: {exc}") from None
    table = _load_table(args.data, args.delimiter, args.header)
    return [row for row in table]  # one unlabeled series per row


def cmd_cluster(args) -> int:
    started = time.perf_counter()
    if args.method not in ("spectral", "kmedoids"):
        raise UsageError(
            f"unknown method {args.method!r}; expected 'spectral' or 'kmedoids'"
        )
    collection = _load_collection(args)
    labels_true = [getattr(ts, "label", None) for ts in collection]
    have_labels = all(lbl is not None for lbl in labels_true)

    try:
        D = pairwise_matrix(collection, order=args.order)
    except ValueError as exc:
        raise DataError(str(exc)) from None

    chosen_b = None
    grid_scores: dict = {}
    if args.method == "kmedoids":
        assignment = kmedoids(D, args.k, seed=args.seed)
    elif args.b is not None:
        chosen_b = args.b
        assignment = spectral_cluster(to_affinity(D, args.b), args.k, seed=args.seed)
    elif have_labels:
        # No b given: grid-search, keeping the best agreement with labels.
        truth = np.asarray(labels_true)
        best = (-1.0, None, None)
        for b in _B_GRID:
            cand = spectral_cluster(to_affinity(D, b), args.k, seed=args.seed)
            score = nmi(cand, truth)
            grid_scores[str(b)] = round(score, 4)
            if score > best[0]:
                best = (score, b, cand)
        _, chosen_b, assignment = best
    else:
        # Unlabeled: no score to search on; scale b to the typical
        # dissimilarity instead.
        positive = D[D > 0]
        chosen_b = float(np.median(positive)) if positive.size else 1.0
        assignment = spectral_cluster(
            to_affinity(D, chosen_b), args.k, seed=args.seed
        )

    out = _out_dir(args)
    rows = [
        [i, labels_true[i] if have_labels else "", int(assignment.labels[i])]
        for i in range(len(collection))
    ]
    _write_csv(out / "assignments.csv", ["series", "label", "cluster"], rows)
    artifacts = ["assignments.csv", "cluster.json"]

    score = nmi(assignment, np.asarray(labels_true)) if have_labels else None
    payload = {
        "method": args.method,
        "k": args.k,
        "order": args.order,
        "n_series": len(collection),
        "nmi": score,
        "b": chosen_b,
    }
    if grid_scores:
        payload["b_grid_nmi"] = grid_scores
    _write_json(out / "cluster.json", payload)

    if not args.no_figures:
        from . import report

        A = to_affinity(D, chosen_b) if chosen_b is not None else np.exp(
            -np.maximum(D, 0.0)
        )
        report.save_affinity(
            A, assignment.labels, out / "affinity.png", title="pairwise affinity"
        )
        artifacts.append("affinity.png")

    if score is not None:
        extra = f" (b={chosen_b:g})" if chosen_b is not None else ""
        print(f"NMI: {score:.4f}{extra}")
    else:
        sizes = np.bincount(assignment.labels, minlength=args.k)
        print("cluster sizes: " + ", ".join(str(int(c)) for c in sizes))

    params = {
        "method": args.method,
        "k": args.k,
        "order": args.order,
        "b": chosen_b,
        "data": str(args.data) if args.data else None,
        "generate": args.generate,
    }
    return _finish(out, args, params, artifacts, started)


# ----------------------------------------------------------------- causal


def _causal_series(args):
    if args.generate is not None:
        n = args.n
        if args.generate == "henon":
            series = henon_generate(
                chain_length=args.chain_length,
                coupling=args.coupling,
                n=n,
                seed=args.seed,
            )
            default_spec = HENON_EMBEDDING
        elif args.generate == "nlvar3":
            series = nlvar3_generate(n=n, seed=args.seed)
            default_spec = NLVAR3_EMBEDDING
        elif args.generate == "independent":
            rng = np.random.default_rng(args.seed)
            series = [rng.standard_normal(n), rng.standard_normal(n)]
            default_spec = EmbeddingSpec(1, 1, 1)
        else:
            raise UsageError(
                f"unknown generator {args.generate!r}; expected "
                "'henon', 'nlvar3' or 'independent'"
            )
        i, j = args.pair
        if not (1 <= i <= len(series) and 1 <= j <= len(series)) or i == j:
            raise UsageError(
                f"--pair indices must be distinct and within 1..{len(series)}"
            )
        return series[i - 1], series[j - 1], default_spec
    if args.x is None or args.y is None:
        raise UsageError("either --generate or both --x and --y are required")
    x = _load_table(args.x, args.delimiter, args.header)[:, args.col]
    y = _load_table(args.y, args.delimiter, args.header)[:, args.col]
    return x, y, EmbeddingSpec(1, 2, 2)


def cmd_causal(args) -> int:
    started = time.perf_counter()
    x, y, default_spec = _causal_series(args)
    spec = EmbeddingSpec(
        delay=args.delay if args.delay is not None else default_spec.delay,
        dim_x=args.dim_x if args.dim_x is not None else default_spec.dim_x,
        dim_y=args.dim_y if args.dim_y is not None else default_spec.dim_y,
    )
    try:
        result = causal_test(
            x,
            y,
            spec,
            n_surrogates=args.surrogates,
            alpha=args.alpha,
            seed=args.seed,
            window=args.window,
            min_offset=args.min_offset,
        )
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if not np.isfinite(result.score):
        raise NumericalError(f"direction score is not finite ({result.score})")

    out = _out_dir(args)
    payload = {
        "score": result.score,
        "p_value": result.p_value,
        "direction": result.direction,
        "embedding": {
            "delay": spec.delay,
            "dim_x": spec.dim_x,
            "dim_y": spec.dim_y,
        },
        "surrogates": args.surrogates,
        "alpha": args.alpha,
        "window": args.window,
    }
    _write_json(out / "causal.json", payload)
    artifacts = ["causal.json"]

    if not args.no_figures:
        from . import report

        report.save_series(
            [x[: args.window], y[: args.window]],
            out / "series.png",
            names=["x", "y"],
            title="analysed window",
        )
        artifacts.append("series.png")

    print(
        f"direction: {result.direction} "
        f"(score {result.score:+.4g}, p={result.p_value:.4g})"
    )
    params = dict(payload)
    params.pop("score")
    params.pop("p_value")
    params.pop("direction")
    params.update(generate=args.generate, pair=list(args.pair))
    return _finish(out, args, params, artifacts, started)


# --------------------------------------------------------------------- rl

_RL_AGENTS = ("dtg-cs", "dtg-mmd", "dtg-kl", "qlearning", "random")


def _rl_env(args):
    if args.env == "maze10":
        return maze_env(10, 10, layout_seed=args.layout_seed)
    if args.env == "maze20":
        return maze_env(20, 20, layout_seed=args.layout_seed)
    if args.env == "mountain-car":
        return mountain_car_env()
    if args.env == "pendulum":
        return pendulum_env()
    raise UsageError(
        f"unknown env {args.env!r}; expected 'maze10', 'maze20', "
        "'mountain-car' or 'pendulum'"
    )


def _rl_config(args) -> DtgConfig:
    try:
        return DtgConfig(
            discount=args.discount,
            learning_rate=args.learning_rate,
            epsilon=args.epsilon,
            rollout_steps=args.rollout_steps or args.max_steps,
            buffer_capacity=args.buffer_capacity or args.max_steps,
            kernel_width=args.kernel_width,
            divergence_widths=tuple(args.divergence_widths),
            refresh_interval=args.refresh_interval,
            novelty_bonus=args.novelty_bonus,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_rl(args) -> int:
    started = time.perf_counter()
    agents = args.agent or ["dtg-cs", "random"]
    for agent in agents:
        if agent not in _RL_AGENTS:
            raise UsageError(
                f"unknown agent {agent!r}; expected one of {', '.join(_RL_AGENTS)}"
            )
    env = _rl_env(args)
    cfg = _rl_config(args)
    bins = getattr(env, "grid_shape", 20)
    seeds = list(range(args.seed, args.seed + args.seeds))

    out = _out_dir(args)
    artifacts = []
    summary_rows = []
    episodes: dict = {}
    for agent in agents:
        logs = []
        for seed in seeds:
            if agent == "random":
                log = run_random(env, args.max_steps, seed=seed)
            elif agent == "qlearning":
                log = run_qlearning(env, cfg, args.max_steps, seed=seed)
            else:
                kind = agent.split("-", 1)[1]
                agent_cfg = dataclasses.replace(cfg, divergence_kind=kind)
                log = run_dtg(env, agent_cfg, args.max_steps, seed=seed)
            logs.append(log)

        counts = sum(occupancy_grid(log, bins=bins) for log in logs)
        successes = sum(log.success for log in logs)
        # Budget-exhausted runs count at the cap, so the mean is censored.
        steps = [
            log.steps_to_goal if log.success else args.max_steps for log in logs
        ]
        entropy = visitation_entropy(counts)
        summary_rows.append(
            [
                agent,
                len(seeds),
                successes,
                f"{successes / len(seeds):.4f}",
                f"{np.mean(steps):.1f}",
                f"{entropy:.4f}",
            ]
        )
        episodes[agent] = {
            "seeds": seeds,
            "success": [bool(log.success) for log in logs],
            "steps_to_goal": [log.steps_to_goal for log in logs],
        }

        grid_name = f"occupancy_{agent}.csv"
        _write_csv(out / grid_name, None, counts.astype(int).tolist())
        artifacts.append(grid_name)
        if not args.no_figures:
            from . import report

            fig_name = f"occupancy_{agent}.png"
            report.save_occupancy(
                log_probabilities(counts),
                out / fig_name,
                title=f"{agent} on {args.env}",
            )
            artifacts.append(fig_name)

    header = ["agent", "seeds", "successes", "success_rate", "mean_steps", "entropy"]
    _write_csv(out / "summary.csv", header, summary_rows)
    _write_json(
        out / "rl.json",
        {"env": args.env, "max_steps": args.max_steps, "episodes": episodes},
    )
    artifacts += ["summary.csv", "rl.json"]

    widths = [f"{w:>12}" for w in header]
    print("".join(f"{h:>13}" for h in header))
    for row in summary_rows:
        print("".join(f"{str(v):>13}" for v in row))

    params = {
        "env": args.env,
        "agents": agents,
        "max_steps": args.max_steps,
        "seeds": args.seeds,
        "layout_seed": args.layout_seed,
        "config": {
            "discount": cfg.discount,
            "learning_rate": cfg.learning_rate,
            "epsilon": cfg.epsilon,
            "rollout_steps": cfg.rollout_steps,
            "buffer_capacity": cfg.buffer_capacity,
            "kernel_width": cfg.kernel_width,
            "divergence_widths": list(cfg.divergence_widths),
            "refresh_interval": cfg.refresh_interval,
            "novelty_bonus": cfg.novelty_bonus,
        },
    }
    return _finish(out, args, params, artifacts, started)


# ------------------------------------------------------------------ bench


def cmd_bench(args) -> int:
    started = time.perf_counter()
    sizes = sorted(args.sizes)
    if len(set(sizes)) != len(sizes):
        raise UsageError("--sizes must be distinct")
    if min(sizes) < 8:
        raise UsageError(f"sizes below 8 time nothing useful, got {min(sizes)}")
    rng = np.random.default_rng(args.seed)

    rows = []
    curves: dict = {}
    exponents: dict = {}
    for d in args.dims:
        for name in ("cond-cs", "cond-mmd"):
            curves[f"{name} d={d}"] = []
        for n in sizes:
            s = PairedDataset(
                rng.standard_normal((n, d)), rng.standard_normal((n, 1))
            )
            t = PairedDataset(
                rng.standard_normal((n, d)), rng.standard_normal((n, 1))
            )
            for name, fn in (
                ("cond-cs", lambda: conditional_cs(s, t, 1.0, 1.0)),
                ("cond-mmd", lambda: conditional_mmd(s, t, CmmdConfig(width=1.0))),
            ):
                # min over repeats: scheduling noise only ever adds time
                reps = max(1, 1000 // n)
                secs = min(_clock(fn) for _ in range(reps))
                rows.append([name, n, d, f"{secs:.6f}"])
                curves[f"{name} d={d}"].append(secs)
        for name in ("cond-cs", "cond-mmd"):
            secs = curves[f"{name} d={d}"]
            slope = float(
                np.polyfit(np.log(np.asarray(sizes, float)), np.log(secs), 1)[0]
            )
            exponents.setdefault(name, {})[str(d)] = round(slope, 4)

    out = _out_dir(args)
    _write_csv(out / "bench.csv", ["measure", "n", "d", "seconds"], rows)
    _write_json(
        out / "bench.json",
        {"sizes": sizes, "dims": list(args.dims), "exponents": exponents},
    )
    artifacts = ["bench.csv", "bench.json"]
    if not args.no_figures:
        from . import report

        report.save_scaling(sizes, curves, out / "bench.png", title="wall-time scaling")
        artifacts.append("bench.png")

    for name, by_dim in exponents.items():
        for d, slope in by_dim.items():
            print(f"{name} (d={d}): exponent {slope:.2f}")
    params = {"sizes": sizes, "dims": list(args.dims)}
    return _finish(out, args, params, artifacts, started)


def _clock(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; usage problems are 1 here.
    def error(self, message):
        raise UsageError(message)


def _add_common(sub, figures=True):
    sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub.add_argument(
        "--out", default=".", help="output directory (default: current)"
    )
    if figures:
        sub.add_argument(
            "--no-figures",
            action="store_true",
            help="skip matplotlib rendering",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="condiv",
        description="Conditional divergence estimators and evaluation pipelines.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    div = commands.add_parser(
        "divergence", help="one divergence value from two CSV files"
    )
    div.add_argument("file_s")
    div.add_argument("file_t")
    div.add_argument(
        "--measure",
        required=True,
        help="cs, mmd, kl, cond-cs, cond-mmd, cond-kl or cond-vn",
    )
    div.add_argument("--x-cols", help="conditioning columns, e.g. 0..9 or 0,2,5")
    div.add_argument("--y-cols", help="response columns")
    div.add_argument("--delimiter", default=",")
    div.add_argument(
        "--header", action="store_true", help="first row is a header, skip it"
    )
    div.add_argument(
        "--sigma", help="kernel width: a number or 'median' (the default)"
    )
    div.add_argument("--sigma-y", help="response kernel width for cond-cs")
    div.add_argument(
        "--permutations",
        type=int,
        default=0,
        help="run a permutation test with this many re-splits",
    )
    div.add_argument("--significance", type=float, default=0.05)
    _add_common(div, figures=False)
    div.set_defaults(func=cmd_divergence)

    power = commands.add_parser(
        "power", help="rejection-rate matrices over the simulation sets"
    )
    power.add_argument(
        "--measure",
        action="append",
        help="repeatable; defaults to cond-cs",
    )
    power.add_argument("--n", type=int, default=500, help="samples per set")
    power.add_argument("--p", type=int, default=10, help="conditioning dimension")
    power.add_argument("--permutations", type=int, default=100)
    power.add_argument("--trials", type=int, default=10)
    power.add_argument("--significance", type=float, default=0.05)
    power.add_argument("--sets", default="a,b,c,d,e", help="generator set ids")
    _add_common(power)
    power.set_defaults(func=cmd_power, measure=None)

    cluster = commands.add_parser("cluster", help="cluster a series collection")
    cluster.add_argument("--data", help="CSV (one series per row) or UCR file")
    cluster.add_argument(
        "--format", default="csv", choices=("csv", "ucr"), help="input layout"
    )
    cluster.add_argument(
        "--generate",
        choices=("ar",),
        help="use the bundled AR(2) three-family collection instead of --data",
    )
    cluster.add_argument("--n-per-family", type=int, default=10)
    cluster.add_argument("--length", type=int, default=200)
    cluster.add_argument("--order", type=int, default=3, help="embedding order")
    cluster.add_argument("--k", type=int, default=3, help="number of clusters")
    cluster.add_argument("--method", default="spectral")
    cluster.add_argument(
        "--b",
        type=float,
        help="affinity scale; grid-searched when omitted",
    )
    cluster.add_argument("--delimiter", default=",")
    cluster.add_argument("--header", action="store_true")
    _add_common(cluster)
    cluster.set_defaults(func=cmd_cluster)

    causal = commands.add_parser("causal", help="pairwise causal direction test")
    causal.add_argument("--x", help="CSV with the candidate cause series")
    causal.add_argument("--y", help="CSV with the candidate effect series")
    causal.add_argument("--col", type=int, default=0, help="column to read")
    causal.add_argument(
        "--generate",
        help="'henon', 'nlvar3' or 'independent' instead of --x/--y",
    )
    causal.add_argument(
        "--pair",
        type=int,
        nargs=2,
        default=(1, 2),
        metavar=("I", "J"),
        help="1-based series indices within the generated system",
    )
    causal.add_argument("--chain-length", type=int, default=5)
    causal.add_argument("--coupling", type=float, default=0.3)
    causal.add_argument("--n", type=int, default=4096, help="generated length")
    causal.add_argument("--delay", type=int)
    causal.add_argument("--dim-x", type=int)
    causal.add_argument("--dim-y", type=int)
    causal.add_argument("--surrogates", type=int, default=100)
    causal.add_argument("--alpha", type=float, default=0.05)
    causal.add_argument("--window", type=int, default=1024)
    causal.add_argument("--min-offset", type=int, default=512)
    causal.add_argument("--delimiter", default=",")
    causal.add_argument("--header", action="store_true")
    _add_common(causal)
    causal.set_defaults(func=cmd_causal)

    rl = commands.add_parser("rl", help="reward-free exploration runs")
    rl.add_argument(
        "--env",
        default="maze10",
        help="maze10, maze20, mountain-car or pendulum",
    )
    rl.add_argument(
        "--agent",
        action="append",
        help="repeatable: dtg-cs, dtg-mmd, dtg-kl, qlearning, random "
        "(default: dtg-cs and random)",
    )
    rl.add_argument("--max-steps", type=int, default=10_000)
    rl.add_argument("--seeds", type=int, default=20, help="number of seeds")
    rl.add_argument(
        "--layout-seed", type=int, default=5, help="maze layout (default 5)"
    )
    # Exploration profile tuned for the bundled environments; the library
    # defaults stay on the slow kernel temporal-difference regime.
    rl.add_argument("--discount", type=float, default=0.9)
    rl.add_argument("--learning-rate", type=float, default=1.0)
    rl.add_argument("--epsilon", type=float, default=0.05)
    rl.add_argument("--kernel-width", type=float, default=0.05)
    rl.add_argument(
        "--divergence-widths",
        type=float,
        nargs=2,
        default=(0.05, 0.1),
        metavar=("WX", "WY"),
    )
    rl.add_argument("--novelty-bonus", type=float, default=10.0)
    rl.add_argument(
        "--buffer-capacity", type=int, help="default: --max-steps (keep all)"
    )
    rl.add_argument(
        "--rollout-steps", type=int, help="default: --max-steps (no re-seat)"
    )
    rl.add_argument("--refresh-interval", type=int, default=10)
    _add_common(rl)
    rl.set_defaults(func=cmd_rl)

    bench = commands.add_parser("bench", help="empirical estimator scaling")
    bench.add_argument(
        "--sizes",
        type=int,
        nargs="+",
        default=(250, 500, 1000, 2000),
    )
    bench.add_argument("--dims", type=int, nargs="+", default=(10,))
    _add_common(bench)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # Residual library rejections are input-derived.
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
