"""Command-line front end: generate, run, account, compare, verify.

Configuration lives in a JSON file; any leaf can be overridden with
``--set dotted.path=value``. The seed is mandatory (no wall-clock
default) so every artifact is reproducible byte for byte. A run refuses
to release anything until the input log satisfies the constraint
declared for accounting, because the privacy bound printed in the
header is meaningless otherwise.

Exit codes: 0 success, 2 configuration error, 3 constraint violation,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import IO, Mapping, Sequence

import numpy as np

from .accounting import (
    Advanced,
    CompositionStrategy,
    HdcrParams,
    Naive,
    PrivacyLoss,
    ReleaseSchedule,
    SwcrParams,
    compose_fold,
    dcr_folds,
    hdcr_folds,
    hdcr_time_bounded_nominal_folds,
    local_folds,
    sup,
    swcr_folds,
)
from .changelog import (
    AtMostK,
    Changelog,
    Hybrid,
    Mutation,
    MutationConstraint,
    TimeBounded,
    TimeRangeFilter,
    dump_changelog,
    entry_satisfies,
    load_changelog,
    validate_constraint,
)
from .engines import (
    ReleaseRecord,
    ReleaseResult,
    aggregate,
    build_hdcr,
    compare_hdcr_swcr,
    derive_swcr_from_hdcr,
    result_to_csv,
    result_to_jsonl,
    run_dcr,
    run_swcr,
    swcr_equivalent_hdcr_params,
)
from .mechanisms import LinearQuerySpec, NoiseSpec, named_stream, sensitivity
from .randomized_response import (
    AnswerTimeline,
    ResponseSpace,
    RrRecord,
    dump_answer_log,
    load_answer_log,
    rr_dcr,
    rr_hdcr,
)
from .verification import format_reports, run_all

RELEASE_KINDS = ("dcr", "swcr", "hdcr", "rr-dcr", "rr-hdcr")


class ConfigError(ValueError):
    """Invalid or missing configuration; the message names the field path."""


class ConstraintViolationError(RuntimeError):
    """The input log does not satisfy its declared mutation constraint."""


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConstraintViolationError as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpcr",
        description="Differentially-private continual releases over changelogs.",
    )
    sub = parser.add_subparsers(required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic changelog or answer log")
    _config_args(p_gen)
    p_gen.add_argument("--out", help="output path (overrides output.path)")
    p_gen.set_defaults(handler=cmd_generate)

    p_run = sub.add_parser("run", help="execute a release against a log file")
    _config_args(p_run)
    p_run.add_argument("--changelog", required=True, help="JSONL changelog or answer log")
    p_run.add_argument("--out", help="output path (overrides output.path)")
    p_run.set_defaults(handler=cmd_run)

    p_acc = sub.add_parser("account", help="print privacy bounds for the configured release")
    _config_args(p_acc)
    p_acc.set_defaults(handler=cmd_account)

    p_cmp = sub.add_parser("compare", help="hierarchy-vs-sliding-window variance predicate")
    p_cmp.add_argument("--window", type=int, required=True)
    p_cmp.add_argument("--period", type=int, required=True)
    p_cmp.add_argument("--branching", default="2,4,16", help="comma-separated factors")
    p_cmp.add_argument(
        "--constraint", required=True,
        help="at_most_k:<k> or time_bounded:<bound>",
    )
    p_cmp.set_defaults(handler=cmd_compare)

    p_ver = sub.add_parser("verify", help="run the brute-force oracle suite")
    p_ver.add_argument("--trials", type=int, default=10_000)
    p_ver.add_argument("--seed", type=int, default=20_240_807)
    p_ver.add_argument("--inject-fault", help=argparse.SUPPRESS)
    p_ver.set_defaults(handler=cmd_verify)
    return parser


def _config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument(
        "--set", action="append", default=[], metavar="PATH=VALUE",
        help="override one config leaf, e.g. --set release.epsilon=0.5",
    )


# -- configuration plumbing -------------------------------------------------

def load_config(path: str, overrides: Sequence[str], seed: int | None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs PATH=VALUE, got {item!r}")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{dotted}: {part} is not an object")
        node[parts[-1]] = value
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def _get(cfg: Mapping, path: str, kind: type, default=None, required: bool = True):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, Mapping) or part not in node:
            if required and default is None:
                raise ConfigError(f"missing field {path!r}")
            return default
        node = node[part]
    if kind is float and isinstance(node, int) and not isinstance(node, bool):
        node = float(node)
    if kind is int and isinstance(node, bool):
        raise ConfigError(f"field {path!r} must be {kind.__name__}, got a boolean")
    if not isinstance(node, kind):
        raise ConfigError(f"field {path!r} must be {kind.__name__}, got {type(node).__name__}")
    return node


def _seed(cfg: Mapping) -> int:
    if "seed" not in cfg:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    return _get(cfg, "seed", int)


def constraint_from_config(obj, path: str) -> MutationConstraint:
    if not isinstance(obj, Mapping) or "kind" not in obj:
        raise ConfigError(f"{path} must be an object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "at_most_k":
            return AtMostK(int(obj["k"]))
        if kind == "time_bounded":
            return TimeBounded(int(obj["bound"]))
        if kind == "hybrid":
            branches = obj.get("branches")
            if not isinstance(branches, list) or not branches:
                raise ConfigError(f"{path}.branches must be a non-empty list")
            return Hybrid(tuple(
                constraint_from_config(b, f"{path}.branches[{i}]")
                for i, b in enumerate(branches)
            ))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind must be at_most_k, time_bounded or hybrid, got {kind!r}")


def _constraint_json(constraint: MutationConstraint) -> dict:
    if isinstance(constraint, AtMostK):
        return {"kind": "at_most_k", "k": constraint.k}
    if isinstance(constraint, TimeBounded):
        return {"kind": "time_bounded", "bound": constraint.bound}
    return {"kind": "hybrid", "branches": [_constraint_json(b) for b in constraint.branches]}


def query_from_config(cfg: Mapping) -> LinearQuerySpec:
    qcfg = _get(cfg, "release.query", dict, default={"fn": "identity", "bounds": [0.0, 1.0]})
    fn = qcfg.get("fn", "identity")
    bounds = qcfg.get("bounds", [0.0, 1.0])
    if not (isinstance(bounds, list) and len(bounds) == 2):
        raise ConfigError("release.query.bounds must be [lower, upper]")
    predicate = None
    if fn == "indicator":
        if "threshold" not in qcfg:
            raise ConfigError("release.query.threshold is required for indicator queries")
        threshold = float(qcfg["threshold"])
        predicate = lambda v: v > threshold  # noqa: E731
    table = qcfg.get("table")
    if table is not None:
        table = {float(k): float(v) for k, v in table.items()}
    try:
        return LinearQuerySpec(fn, float(bounds[0]), float(bounds[1]), predicate, table)
    except ValueError as exc:
        raise ConfigError(f"release.query: {exc}") from exc


def strategy_from_config(cfg: Mapping) -> CompositionStrategy:
    name = _get(cfg, "release.composition", str, default="naive")
    if name == "naive":
        return Naive()
    if name == "advanced":
        return Advanced(_get(cfg, "release.delta_slack", float, default=1e-6))
    raise ConfigError(f"release.composition must be naive or advanced, got {name!r}")


# -- accounting reports ------------------------------------------------------

def release_accounting(cfg: Mapping) -> dict:
    """Folds and composed losses for the configured release.

    The returned mapping is embedded verbatim in run headers, so the
    CLI can never drift from the library's accountant.
    """
    kind = _get(cfg, "release.kind", str)
    if kind not in RELEASE_KINDS:
        raise ConfigError(f"release.kind must be one of {RELEASE_KINDS}, got {kind!r}")
    constraint = constraint_from_config(_get(cfg, "release.constraint", dict), "release.constraint")
    epsilon = _get(cfg, "release.epsilon", float)
    delta = _get(cfg, "release.delta", float, default=0.0)
    try:
        per_query = PrivacyLoss(epsilon, delta)
    except ValueError as exc:
        raise ConfigError(f"release: {exc}") from exc
    strategy = strategy_from_config(cfg)
    local = _get(cfg, "release.local", bool, default=kind.startswith("rr-"))
    if kind.startswith("rr-") and not local:
        raise ConfigError("randomized-response releases are accounted locally; release.local must not be false")

    def fold_fn(atomic) -> int:
        if kind == "dcr" or kind == "rr-dcr":
            return dcr_folds(_schedule_from_config(cfg), atomic)
        if kind == "swcr":
            if _get(cfg, "release.from_hdcr", bool, default=False):
                # the derived release's loss is the underlying hierarchy's
                params = swcr_equivalent_hdcr_params(
                    _swcr_from_config(cfg),
                    _get(cfg, "release.branching", int, default=2),
                )
                return hdcr_folds(params, atomic)
            return swcr_folds(_swcr_from_config(cfg), atomic)
        return hdcr_folds(_hdcr_from_config(cfg), atomic)

    def bound_for(c: MutationConstraint, doubled: bool) -> tuple[int | None, PrivacyLoss]:
        if isinstance(c, Hybrid):
            parts = [bound_for(b, doubled) for b in c.branches]
            return None, sup(loss for _, loss in parts)
        folds = fold_fn(c)
        if doubled:
            folds = local_folds(folds)
        return folds, compose_fold(per_query, folds, strategy)

    folds, loss = bound_for(constraint, local)
    local_fold_count, local_loss = bound_for(constraint, True)
    report = {
        "kind": kind,
        "constraint": _constraint_json(constraint),
        "per_query": {"epsilon": per_query.epsilon, "delta": per_query.delta},
        "scope": "local" if local else "global",
        "folds": folds,
        "epsilon": loss.epsilon,
        "delta": loss.delta,
        "local_folds": local_fold_count,
        "local_epsilon": local_loss.epsilon,
        "local_delta": local_loss.delta,
    }
    if kind in ("hdcr", "rr-hdcr") and isinstance(constraint, TimeBounded):
        report["nominal_layer_sum_folds"] = hdcr_time_bounded_nominal_folds(
            _hdcr_from_config(cfg), constraint.bound
        )
    return report


def _schedule_from_config(cfg: Mapping) -> ReleaseSchedule:
    scfg = _get(cfg, "release.schedule", dict)
    try:
        if "ticks" in scfg:
            return ReleaseSchedule(tuple(int(t) for t in scfg["ticks"]))
        return ReleaseSchedule.uniform(
            int(scfg["start"]), int(scfg["interval"]), int(scfg["count"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"release.schedule: {exc}") from exc


def _swcr_from_config(cfg: Mapping) -> SwcrParams:
    try:
        return SwcrParams(
            window=_get(cfg, "release.window", int),
            period=_get(cfg, "release.period", int),
            first_release=_get(cfg, "release.first_release", int),
            count=_get(cfg, "release.count", int),
        )
    except ValueError as exc:
        raise ConfigError(f"release: {exc}") from exc


def _hdcr_from_config(cfg: Mapping) -> HdcrParams:
    try:
        return HdcrParams(
            height=_get(cfg, "release.height", int),
            branching=_get(cfg, "release.branching", int),
            start=_get(cfg, "release.start", int),
            span=_get(cfg, "release.span", int),
            interval=_get(cfg, "release.interval", int),
        )
    except ValueError as exc:
        raise ConfigError(f"release: {exc}") from exc


def _labels_from_config(cfg: Mapping) -> ResponseSpace:
    labels = _get(cfg, "release.labels", list)
    try:
        return ResponseSpace(tuple(str(l) for l in labels))
    except ValueError as exc:
        raise ConfigError(f"release.labels: {exc}") from exc


# -- generate ----------------------------------------------------------------

def cmd_generate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.set, args.seed)
    seed = _seed(cfg)
    out = args.out or _get(cfg, "output.path", str)
    labels = _get(cfg, "generator.labels", list, default=None, required=False)
    if labels:
        timelines = generate_answer_log(cfg, seed)
        dump_answer_log(timelines, out)
        print(f"wrote {sum(len(t) for t in timelines.values())} answer records to {out}")
    else:
        log = generate_changelog(cfg, seed)
        dump_changelog(log, out)
        print(f"wrote {len(log)} mutations to {out}")
    return 0


def _generator_params(cfg: Mapping) -> tuple[int, int, MutationConstraint, float]:
    entries = _get(cfg, "generator.entries", int)
    horizon = _get(cfg, "generator.horizon", int)
    if entries < 1 or horizon < 1:
        raise ConfigError("generator.entries and generator.horizon must be >= 1")
    constraint = constraint_from_config(
        _get(cfg, "generator.constraint", dict), "generator.constraint"
    )
    rate = _get(cfg, "generator.mutation_rate", float, default=0.5)
    if not 0 <= rate <= 1:
        raise ConfigError(f"generator.mutation_rate must be in [0, 1], got {rate}")
    return entries, horizon, constraint, rate


def _pick_branch(constraint: MutationConstraint, rng: np.random.Generator):
    if isinstance(constraint, Hybrid):
        choice = constraint.branches[int(rng.integers(0, len(constraint.branches)))]
        return _pick_branch(choice, rng)
    return constraint


def _mutation_times(
    rng: np.random.Generator, t0: int, horizon: int, branch, rate: float
) -> list[int]:
    if isinstance(branch, AtMostK):
        budget, last = branch.k - 1, horizon
    else:
        budget, last = 4, min(horizon, t0 + branch.bound)
    times = [t0]
    if budget > 0 and last > t0:
        extra = int(rng.binomial(budget, rate))
        if extra:
            times += sorted(
                int(t) for t in np.unique(rng.integers(t0 + 1, last + 1, size=extra))
            )
    return times


def generate_changelog(cfg: Mapping, seed: int) -> Changelog:
    """Synthesize a changelog that satisfies the declared constraint."""
    entries, horizon, constraint, rate = _generator_params(cfg)
    value_range = _get(cfg, "generator.value_range", list, default=[0.0, 100.0])
    if len(value_range) != 2 or value_range[0] > value_range[1]:
        raise ConfigError(f"generator.value_range must be [low, high], got {value_range}")
    low, high = float(value_range[0]), float(value_range[1])
    muts: list[Mutation] = []
    for i in range(entries):
        rng = named_stream(seed, "generate", i)
        eid = f"e{i:06d}"
        times = _mutation_times(
            rng, int(rng.integers(0, horizon)), horizon, _pick_branch(constraint, rng), rate
        )
        value = float(np.round(rng.uniform(low, high), 6))
        chain = [Mutation(times[0], eid, None, value)]
        for t in times[1:]:
            new_value = float(np.round(rng.uniform(low, high), 6))
            chain.append(Mutation(t, eid, value, new_value))
            value = new_value
        if len(chain) > 1 and rng.random() < 0.25 * rate:
            tail = chain.pop()
            chain.append(Mutation(tail.time, eid, tail.prev_value, None))
        muts.extend(chain)
    log = Changelog.from_unsorted(muts)
    bad = [eid for eid, ok in validate_constraint(log, constraint).items() if not ok]
    if bad:
        raise AssertionError(f"generator produced constraint-violating entries: {bad[:5]}")
    return log


def generate_answer_log(cfg: Mapping, seed: int) -> dict[str, AnswerTimeline]:
    """Synthesize per-entry answer timelines under the declared constraint."""
    entries, horizon, constraint, rate = _generator_params(cfg)
    labels = [str(l) for l in _get(cfg, "generator.labels", list)]
    if len(labels) < 2:
        raise ConfigError("generator.labels needs at least two labels")
    timelines: dict[str, AnswerTimeline] = {}
    for i in range(entries):
        rng = named_stream(seed, "generate-answers", i)
        eid = f"e{i:06d}"
        times = _mutation_times(
            rng, int(rng.integers(0, horizon)), horizon, _pick_branch(constraint, rng), rate
        )
        current = labels[int(rng.integers(0, len(labels)))]
        records: list[tuple[int, str | None]] = [(times[0], current)]
        for t in times[1:]:
            others = [l for l in labels if l != current]
            current = others[int(rng.integers(0, len(others)))]
            records.append((t, current))
        if len(records) > 1 and rng.random() < 0.25 * rate:
            t, _ = records.pop()
            records.append((t, None))
        timelines[eid] = tuple(records)
    return timelines


# -- run ----------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.set, args.seed)
    seed = _seed(cfg)
    kind = _get(cfg, "release.kind", str)
    if kind not in RELEASE_KINDS:
        raise ConfigError(f"release.kind must be one of {RELEASE_KINDS}, got {kind!r}")
    accounting = release_accounting(cfg)
    constraint = constraint_from_config(_get(cfg, "release.constraint", dict), "release.constraint")
    out = args.out or _get(cfg, "output.path", str)
    fmt = _get(cfg, "output.format", str, default="csv")
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"output.format must be csv or jsonl, got {fmt!r}")
    include_exact = _get(cfg, "output.include_exact", bool, default=False)

    header = {
        "seed": seed,
        "input": args.changelog,
        "privacy": accounting,
    }
    if kind.startswith("rr-"):
        timelines = load_answer_log(args.changelog)
        _check_answer_constraint(timelines, constraint)
        records = _run_rr(cfg, kind, timelines, seed)
        with open(out, "w", encoding="utf-8") as fh:
            space = _labels_from_config(cfg)
            _write_rr(records, space, fh, fmt, header)
    else:
        log = load_changelog(args.changelog)
        bad = [eid for eid, ok in validate_constraint(log, constraint).items() if not ok]
        if bad:
            raise ConstraintViolationError(
                f"{len(bad)} entries violate the declared constraint (first: {bad[:3]})"
            )
        result = _run_release(cfg, kind, log, seed)
        with open(out, "w", encoding="utf-8") as fh:
            _write_release(result, fh, fmt, header, include_exact)
    print(f"wrote release to {out} (accounted {accounting['scope']} loss: "
          f"epsilon={accounting['epsilon']:.6g}, delta={accounting['delta']:.3g})")
    return 0


def _check_answer_constraint(
    timelines: Mapping[str, AnswerTimeline], constraint: MutationConstraint
) -> None:
    # answer records play the role of mutations: count and time span
    bad = []
    for eid, timeline in timelines.items():
        chain = [Mutation(timeline[0][0], eid, None, 1.0)] + [
            Mutation(t, eid, 1.0, 1.0) for t, _ in timeline[1:]
        ]
        if not entry_satisfies(tuple(chain), constraint):
            bad.append(eid)
    if bad:
        raise ConstraintViolationError(
            f"{len(bad)} entries violate the declared constraint (first: {bad[:3]})"
        )


def _run_release(cfg: Mapping, kind: str, log: Changelog, seed: int) -> ReleaseResult:
    spec = query_from_config(cfg)
    epsilon = _get(cfg, "release.epsilon", float)
    try:
        noise = NoiseSpec(epsilon, sensitivity(spec), seed)
    except ValueError as exc:
        raise ConfigError(f"release: {exc}") from exc
    if kind == "dcr":
        return run_dcr(log, _schedule_from_config(cfg), spec, noise)
    if kind == "swcr":
        if _get(cfg, "release.from_hdcr", bool, default=False):
            result, _ = derive_swcr_from_hdcr(
                log, _swcr_from_config(cfg), _get(cfg, "release.branching", int, default=2),
                noise, spec,
            )
            return result
        return run_swcr(log, _swcr_from_config(cfg), spec, noise)
    params = _hdcr_from_config(cfg)
    tree = build_hdcr(log, params, spec, noise)
    records = []
    for j in range(1, params.grid_size() + 1):
        agg = aggregate(tree, 0, j)
        end = min(params.start + j * params.interval, params.start + params.span)
        records.append(
            ReleaseRecord(
                j - 1, TimeRangeFilter(params.start, end),
                agg.noisy, agg.exact, agg.node_count, agg.variance,
            )
        )
    return ReleaseResult(tuple(records))


def _run_rr(
    cfg: Mapping, kind: str, timelines: Mapping[str, AnswerTimeline], seed: int
) -> list[RrRecord]:
    space = _labels_from_config(cfg)
    epsilon = _get(cfg, "release.epsilon", float)
    if kind == "rr-dcr":
        return rr_dcr(timelines, space, _schedule_from_config(cfg), epsilon, seed)
    return rr_hdcr(timelines, space, _hdcr_from_config(cfg), epsilon, seed)


def _write_release(
    result: ReleaseResult, fh: IO[str], fmt: str, header: dict, include_exact: bool
) -> None:
    if fmt == "jsonl":
        fh.write(json.dumps({"type": "header", **header}))
        fh.write("\n")
        result_to_jsonl(result, fh, include_exact)
    else:
        fh.write("# " + json.dumps(header) + "\n")
        result_to_csv(result, fh, include_exact)


def _write_rr(
    records: list[RrRecord], space: ResponseSpace, fh: IO[str], fmt: str, header: dict
) -> None:
    """Cumulative histogram estimates, one row per release time."""
    cumulative = np.zeros(space.size)
    cum_var = np.zeros(space.size)
    rows = []
    for rec in records:
        if rec.node_count is None:
            cumulative = cumulative + rec.estimate.values
            cum_var = cum_var + np.diag(rec.estimate.covariance)
            rows.append((rec.time, cumulative.copy(), cum_var.copy(), None))
        else:
            rows.append(
                (rec.time, rec.estimate.values, np.diag(rec.estimate.covariance), rec.node_count)
            )
    if fmt == "jsonl":
        fh.write(json.dumps({"type": "header", **header}))
        fh.write("\n")
        for t, values, variances, node_count in rows:
            rec = {"t": t, "estimate": values.tolist(), "variance": variances.tolist()}
            if node_count is not None:
                rec["node_count"] = node_count
            fh.write(json.dumps(rec))
            fh.write("\n")
    else:
        fh.write("# " + json.dumps(header) + "\n")
        names = ["t"]
        names += [f"vhat_{l}" for l in space.labels]
        names += [f"var_{l}" for l in space.labels]
        fh.write(",".join(names) + "\n")
        for t, values, variances, _ in rows:
            cells = [str(t)] + [repr(float(v)) for v in values] + [repr(float(v)) for v in variances]
            fh.write(",".join(cells) + "\n")


# -- account / compare / verify ------------------------------------------------

def cmd_account(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.set, args.seed)
    report = release_accounting(cfg)
    print(f"release kind:      {report['kind']}")
    print(f"constraint:        {json.dumps(report['constraint'])}")
    print(f"per-query loss:    (epsilon={report['per_query']['epsilon']:.6g}, "
          f"delta={report['per_query']['delta']:.3g})")
    folds = report["folds"]
    print(f"scope:             {report['scope']}")
    print(f"composed folds:    {'per-branch sup' if folds is None else folds}")
    print(f"accounted loss:    (epsilon={report['epsilon']:.6g}, delta={report['delta']:.3g})")
    if report["scope"] == "global":
        lf = report["local_folds"]
        print(f"local folds:       {'per-branch sup' if lf is None else lf}")
        print(f"local bound:       (epsilon={report['local_epsilon']:.6g}, "
              f"delta={report['local_delta']:.3g})")
    if "nominal_layer_sum_folds" in report:
        print(f"nominal layer sum: {report['nominal_layer_sum_folds']:.6g} "
              "(closed form; the exact per-layer count above is authoritative)")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        name, _, value = args.constraint.partition(":")
        if name == "at_most_k":
            constraint: AtMostK | TimeBounded = AtMostK(int(value or 1))
        elif name == "time_bounded":
            constraint = TimeBounded(int(value))
        else:
            raise ConfigError(
                f"--constraint must be at_most_k:<k> or time_bounded:<bound>, got {args.constraint!r}"
            )
        factors = [int(c) for c in args.branching.split(",") if c]
        swcr = SwcrParams(window=args.window, period=args.period, first_release=args.window, count=2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print("branching  height  lhs           rhs           hdcr_wins  eps_prime_factor")
    for c in factors:
        cmp = compare_hdcr_swcr(swcr, c, constraint)
        print(
            f"{c:<9d}  {cmp.height:<6d}  {cmp.lhs:<12.6g}  {cmp.rhs:<12.6g}  "
            f"{'yes' if cmp.hdcr_wins else 'no ':<9}  {cmp.epsilon_prime_factor:.6g}"
        )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.trials < 100:
        raise ConfigError(f"--trials must be >= 100, got {args.trials}")
    reports = run_all(trials=args.trials, seed=args.seed, fault=args.inject_fault)
    print(format_reports(reports))
    failed = sum(1 for r in reports if not r.passed)
    print(f"{len(reports) - failed}/{len(reports)} oracle checks passed")
    return 4 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
