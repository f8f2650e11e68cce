# -*- coding: utf-8 -*-
#
# Copyright 2017-2020- Swiss Data Science Center (SDSC)
# A partnership between École Polytechnique Fédérale de Lausanne (EPFL) and
# Eidgenössische Technische Hochschule Zürich (ETHZ).
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Command line interface: ``combrec`` with the ``lrc``, ``rep`` and ``cyc`` groups and ``reproduce``."""

import csv
import functools
import io
import json
import logging
import sys
import time

import click
from marshmallow.exceptions import ValidationError

from combrec import __version__
from combrec.config import OUTPUT_FORMATS, ReportEnvelope
from combrec.cycles import DEFAULT_CHUNK_SIZE, DEFAULT_SEED, mean, moment_table, sample_cycles, variance
from combrec.lattice import (
    WeightSpec,
    brute_force_min_rep,
    compose_minimum,
    min_rep_size,
    size_bounds,
    subadditive_sweep,
)
from combrec.locality import LocalityStructure, build_example_code, compute_T, shorten, verify_capability
from combrec.reproduce import DEFAULT_CODES, DEFAULT_TRIALS, GOLDEN_PATH, ReproduceReportSchema, reproduce_all
from combrec.schema import (
    BoundReportSchema,
    CapabilitySchema,
    CodeSchema,
    CompositionSchema,
    CycleSampleSchema,
    EnvelopeSchema,
    LocalitySchema,
    MinRepSchema,
    MomentTableSchema,
    RunConfigSchema,
    ShorteningTraceSchema,
    SweepSchema,
    WeightSpecSchema,
)
from combrec.utils import BudgetExceededError, format_rational, parse_rational

logger = logging.getLogger("combrec")


class Output(object):
    """What a command produced: the JSON payload, an optional table and a short text rendering."""

    def __init__(self, payload, text, header=None, rows=None):
        self.payload = payload
        self.text = text
        self.header = header
        self.rows = rows


def configure_logging(verbose):
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    if verbose and not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)


def _dumps(data):
    return json.dumps(data, sort_keys=True, indent=2)


def _csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _load_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text if text.endswith("\n") else text + "\n")
    else:
        click.echo(text.rstrip("\n"))


def _rational(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_rational(value)
    except ValueError as e:
        raise click.BadParameter(str(e))


def _int_list(ctx, param, value):
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma separated integers, got {!r}".format(value))


def _weight_spec(value):
    if value in ("uniform", "shell"):
        return WeightSpec(value)
    return WeightSpecSchema().load(_load_json(value))


def common_options(default_format="json", csv_flag=True):
    """Options shared by every leaf command.

    With ``csv_flag=False`` the command keeps ``--csv`` for itself and CSV output is chosen with ``--format csv``.
    """

    def decorator(f):
        @functools.wraps(f)
        def wrapper(*args, fmt, as_json, as_csv=False, **kwargs):
            chosen = {name for name, flag in (("json", as_json), ("csv", as_csv)) if flag}
            if fmt:
                chosen.add(fmt)
            if len(chosen) > 1:
                raise click.UsageError("Choose exactly one output format, got {}".format(sorted(chosen)))
            kwargs["fmt"] = chosen.pop() if chosen else default_format
            return f(*args, **kwargs)

        options = [
            click.option("--format", "fmt", type=click.Choice(OUTPUT_FORMATS), default=None, help="Output format."),
            click.option("--json", "as_json", is_flag=True, help="Shorthand for --format json."),
        ]
        if csv_flag:
            options.append(click.option("--csv", "as_csv", is_flag=True, help="Shorthand for --format csv."))
        options += [
            click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report to a file."),
            click.option("--budget", type=int, default=None, help="Work budget in elementary checks."),
            click.option("--timing", is_flag=True, help="Record wall-clock time in the report."),
            click.option("-v", "--verbose", is_flag=True, help="Log debug messages to stderr."),
        ]
        for option in reversed(options):
            wrapper = option(wrapper)
        return wrapper

    return decorator


def run(command, params, fmt, out, budget, timing, verbose, compute, **settings):
    """Validate the run configuration, call ``compute`` and write the report.

    ``settings`` carries the sampling options (``seed``, ``chunk_size``, ``workers``) into the config. Domain
    errors become exit status 1; a work budget overrun still writes a report flagged as exhausted.
    """
    configure_logging(verbose)
    try:
        config = RunConfigSchema().load(
            dict(settings, command=command, params=params, budget=budget, format=fmt, out=out, timing=timing)
        )
    except ValidationError as e:
        raise click.UsageError(str(e.messages))

    start = time.perf_counter()
    try:
        output = compute(config)
    except BudgetExceededError as e:
        envelope = ReportEnvelope(command, params, None, budget_exhausted=True)
        _write(_dumps(EnvelopeSchema().dump(envelope)), out)
        raise click.ClickException(str(e))
    except (ValueError, ValidationError) as e:
        message = str(e.messages) if isinstance(e, ValidationError) else str(e)
        raise click.ClickException(message)
    elapsed = round(time.perf_counter() - start, 6) if timing else None

    if config.format == "text":
        _write(output.text, out)
    elif config.format == "csv":
        if output.rows is None:
            raise click.UsageError("Command '{}' has no tabular output".format(command))
        _write(_csv_text(output.header, output.rows), out)
    else:
        envelope = ReportEnvelope(command, params, output.payload, timing=elapsed)
        _write(_dumps(EnvelopeSchema().dump(envelope)), out)
    return output


@click.group()
@click.version_option(version=__version__)
def cli():
    """Partial-locality code bounds, weighted lattice representative codes and permutation cycle moments."""


@cli.group()
def lrc():
    """Codes with partial locality."""


@lrc.command("bound")
@click.option("--n", "n", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--theta", type=int, required=True, help="Number of positions with local correction.")
@click.option("--tau", type=int, required=True)
@click.option("--r", "r", type=int, required=True)
@click.option("--q", "q", type=int, default=2, show_default=True)
@click.option("--nonlinear", is_flag=True, help="Use the bound for codes that are not linear.")
@common_options()
def lrc_bound(n, k, theta, tau, r, q, nonlinear, fmt, out, budget, timing, verbose):
    """Iteration budget T and the distance bound n - k + 1 - T tau."""
    params = {"n": n, "k": k, "theta": theta, "tau": tau, "r": r, "q": q, "linear": not nonlinear}

    def compute(config):
        report = compute_T(n, k, theta, tau, r, q=q, linear=not nonlinear)
        rows = [[c.t, c.first, c.second, c.passed] for c in report.conditions]
        text = "T={} bound={} singleton={}".format(report.T, report.bound, report.singleton)
        return Output(BoundReportSchema().dump(report), text, ["t", "first", "second", "passed"], rows)

    run("lrc bound", params, fmt, out, budget, timing, verbose, compute)


def _load_code_and_locality(code_path, loc_path):
    code = CodeSchema().load(_load_json(code_path))
    loc = LocalitySchema().load(_load_json(loc_path))
    return code, LocalityStructure(loc.theta, loc.tau, loc.r, loc.locality_map, n=code.n)


@lrc.command("verify")
@click.option("--code", "code_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--loc", "loc_path", type=click.Path(exists=True, dir_okay=False), required=True)
@common_options()
def lrc_verify(code_path, loc_path, fmt, out, budget, timing, verbose):
    """Check the local correction capability of a code."""
    params = {"code": code_path, "loc": loc_path}

    def compute(config):
        code, loc = _load_code_and_locality(code_path, loc_path)
        result = verify_capability(code, loc, budget=config.work_budget)
        if result.capable:
            text = "capable"
        else:
            text = "not capable: P={}".format([p + 1 for p in result.counterexample])
        counterexample = [p + 1 for p in result.counterexample] if result.counterexample else None
        rows = [[result.capable, result.exhaustive, counterexample]]
        return Output(CapabilitySchema().dump(result), text, ["capable", "exhaustive", "counterexample"], rows)

    run("lrc verify", params, fmt, out, budget, timing, verbose, compute)


@lrc.command("shorten")
@click.option("--code", "code_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--loc", "loc_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None, help="Write the trace here.")
@common_options()
def lrc_shorten(code_path, loc_path, trace_path, fmt, out, budget, timing, verbose):
    """Run the shortening procedure and report the certified distance bound."""
    params = {"code": code_path, "loc": loc_path, "trace": trace_path}

    def compute(config):
        code, loc = _load_code_and_locality(code_path, loc_path)
        if loc.locality_map is None:
            result = verify_capability(code, loc, budget=config.work_budget)
            if not result.capable:
                raise ValueError("No locality set for P={}".format([p + 1 for p in result.counterexample]))
            loc = loc.with_map(result.locality_map)
        trace = shorten(code, loc)
        payload = ShorteningTraceSchema().dump(trace)
        if trace_path:
            _write(_dumps(payload), trace_path)
        rows = [
            [j, [p + 1 for p in step.p], [i + 1 for i in step.i], step.m, step.subcode_size, len(step.j)]
            for j, step in enumerate(trace.steps, start=1)
        ]
        text = "iterations={} certified_bound={} stop_reason={}".format(
            trace.iterations, trace.certified_bound, trace.stop_reason
        )
        return Output(payload, text, ["j", "P", "I", "m", "subcode_size", "reach_size"], rows)

    run("lrc shorten", params, fmt, out, budget, timing, verbose, compute)


@lrc.command("example")
@click.option("--k", "k", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the code file here.")
@click.option("--loc-out", type=click.Path(dir_okay=False), default=None, help="Write the locality file here.")
@click.option("-v", "--verbose", is_flag=True)
def lrc_example(k, out, loc_out, verbose):
    """Build the triple-parity example code."""
    configure_logging(verbose)
    try:
        code, loc = build_example_code(k)
    except ValueError as e:
        raise click.ClickException(str(e))
    code_data = CodeSchema().dump(code)
    if out:
        _write(_dumps(code_data), out)
    if loc_out:
        _write(_dumps(LocalitySchema().dump(loc)), loc_out)
    summary = {"k": code.k, "n": code.n, "words": code.size, "theta": loc.theta_size, "tau": loc.tau, "r": loc.r}
    params = {"k": k, "out": out, "loc_out": loc_out}
    result = summary if out else {"summary": summary, "code": code_data}
    click.echo(_dumps(EnvelopeSchema().dump(ReportEnvelope("lrc example", params, result))))


@cli.group()
def rep():
    """Weighted lattice representative codes."""


@rep.command("min")
@click.option("--m", "m", type=int, required=True)
@click.option("--d", "d", type=int, required=True)
@click.option("--eps", "epsilon", required=True, callback=_rational, help="Level as p/q.")
@click.option("--weights", default="uniform", show_default=True, help="uniform, shell or a weight spec file.")
@click.option("--oracle", is_flag=True, help="Cross-check with the all-subsets oracle.")
@common_options()
def rep_min(m, d, epsilon, weights, oracle, fmt, out, budget, timing, verbose):
    """Exact minimum size of an epsilon-representative code."""
    params = {"m": m, "d": d, "eps": format_rational(epsilon), "weights": weights, "oracle": oracle}

    def compute(config):
        lattice = _weight_spec(weights).square(m, d)
        b, witness = min_rep_size(lattice, epsilon)
        lower, upper = size_bounds(lattice, epsilon)
        checked = brute_force_min_rep(lattice, epsilon) if oracle else None
        result = {
            "shape": list(lattice.shape),
            "epsilon": epsilon,
            "beta": lattice.beta,
            "threshold": lattice.threshold(epsilon),
            "b": b,
            "witness": witness,
            "lower": lower,
            "upper": upper,
            "lower_ok": lower <= b,
            "upper_ok": b <= upper,
            "oracle": checked,
            "oracle_agrees": None if checked is None else checked == b,
        }
        rows = [[m, d, b, result["lower_ok"], result["upper_ok"], checked]]
        text = "b={}".format(b) + ("" if checked is None else " oracle={}".format(checked))
        return Output(MinRepSchema().dump(result), text, ["m", "d", "b_m", "lower_ok", "upper_ok", "oracle"], rows)

    run("rep min", params, fmt, out, budget, timing, verbose, compute)


@rep.command("sweep")
@click.option("--spec", "spec_name", default="uniform", show_default=True, help="uniform, shell or a spec file.")
@click.option("--eps", "epsilon", required=True, callback=_rational)
@click.option("--d", "d", type=int, default=2, show_default=True)
@click.option("--m", "m_list", default="2,4,8", show_default=True, callback=_int_list, help="Comma separated sides.")
@click.option(
    "--csv", "--csv-out", "csv_path", type=click.Path(dir_okay=False), default=None, help="Also write the table here."
)
@click.option("--convergence-check/--no-convergence-check", default=True, show_default=True)
@common_options(csv_flag=False)
def rep_sweep(spec_name, epsilon, d, m_list, csv_path, convergence_check, fmt, out, budget, timing, verbose):
    """Minimum sizes and ratios b_m / m^d over several sides."""
    params = {"spec": spec_name, "eps": format_rational(epsilon), "d": d, "m": m_list}

    def compute(config):
        sweep = subadditive_sweep(_weight_spec(spec_name), epsilon, d, m_list, check_convergence=convergence_check)
        header = ["m", "b_m", "ratio_num", "ratio_den", "lower_ok", "upper_ok"]
        rows = [
            [row.m, row.b, row.ratio.numerator, row.ratio.denominator, row.lower_ok, row.upper_ok]
            for row in sweep.rows
        ]
        if csv_path:
            _write(_csv_text(header, rows), csv_path)
        text = "\n".join("m={} b={} ratio={}".format(row.m, row.b, format_rational(row.ratio)) for row in sweep.rows)
        return Output(SweepSchema().dump(sweep), text, header, rows)

    run("rep sweep", params, fmt, out, budget, timing, verbose, compute)


@rep.command("compose")
@click.option("--m", "m", type=int, required=True)
@click.option("--r", "r", type=int, required=True)
@click.option("--eps", "epsilon", required=True, callback=_rational)
@click.option("--weights", default="uniform", show_default=True)
@common_options()
def rep_compose(m, r, epsilon, weights, fmt, out, budget, timing, verbose):
    """Compose a code for the m x m lattice from r-blocks and the remainder strips."""
    params = {"m": m, "r": r, "eps": format_rational(epsilon), "weights": weights}

    def compute(config):
        composition = compose_minimum(_weight_spec(weights).square(m, 2), r, epsilon)
        rows = [[m, r, composition.size, composition.bound, composition.representative]]
        text = "size={} bound={} representative={}".format(
            composition.size, composition.bound, composition.representative
        )
        return Output(CompositionSchema().dump(composition), text, ["m", "r", "size", "bound", "representative"], rows)

    run("rep compose", params, fmt, out, budget, timing, verbose, compute)


@cli.group()
def cyc():
    """Cycles of uniform random permutations."""


@cyc.command("moments")
@click.option("--n", "n", type=int, required=True)
@click.option("--s", "s", type=int, required=True)
@common_options()
def cyc_moments(n, s, fmt, out, budget, timing, verbose):
    """Exact moments E N_n^s from the recursion."""

    def compute(config):
        table = moment_table(n, s)
        rows = [[i, j, format_rational(value)] for i, j, value in table.cells()]
        text = "\n".join("mu[{}][{}]={}".format(*row) for row in rows)
        return Output(MomentTableSchema().dump(table), text, ["n", "s", "value"], rows)

    run("cyc moments", {"n": n, "s": s}, fmt, out, budget, timing, verbose, compute)


@cyc.command("mean")
@click.option("--n", "n", type=int, required=True)
@common_options(default_format="text")
def cyc_mean(n, fmt, out, budget, timing, verbose):
    """Expected number of cycles H_n."""

    def compute(config):
        value = format_rational(mean(n))
        return Output({"n": n, "mean": value}, value, ["n", "mean"], [[n, value]])

    run("cyc mean", {"n": n}, fmt, out, budget, timing, verbose, compute)


@cyc.command("var")
@click.option("--n", "n", type=int, required=True)
@common_options(default_format="text")
def cyc_var(n, fmt, out, budget, timing, verbose):
    """Variance of the number of cycles."""

    def compute(config):
        value = format_rational(variance(n))
        return Output({"n": n, "variance": value}, value, ["n", "variance"], [[n, value]])

    run("cyc var", {"n": n}, fmt, out, budget, timing, verbose, compute)


@cyc.command("sample")
@click.option("--n", "n", type=int, required=True)
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@common_options()
def cyc_sample(n, trials, seed, chunk_size, workers, fmt, out, budget, timing, verbose):
    """Monte Carlo cycle counts and first-cycle lengths."""
    params = {"n": n, "trials": trials, "seed": seed, "chunk_size": chunk_size, "workers": workers}

    def compute(config):
        sample = sample_cycles(n, trials, seed=config.seed, chunk_size=config.chunk_size, workers=config.workers)
        rows = [[k, count] for k, count in enumerate(sample.count_histogram) if k >= 1]
        text = "mean={:.6f} variance={:.6f} exact_mean={}".format(
            sample.mean, sample.variance, format_rational(mean(n))
        )
        return Output(CycleSampleSchema().dump(sample), text, ["cycles", "count"], rows)

    settings = {"seed": seed, "chunk_size": chunk_size, "workers": workers}
    run("cyc sample", params, fmt, out, budget, timing, verbose, compute, **settings)


@cli.command("reproduce")
@click.option("--only", multiple=True, help="Run criteria with this id prefix (repeatable).")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@click.option("--codes", type=int, default=DEFAULT_CODES, show_default=True)
@click.option("--golden", type=click.Path(dir_okay=False), default=GOLDEN_PATH, help="Golden reference file.")
@click.option("--workers", type=int, default=1, show_default=True)
@common_options()
def reproduce(only, seed, trials, codes, golden, workers, fmt, out, budget, timing, verbose):
    """Run the acceptance suite and print a pass/fail matrix."""
    params = {"only": list(only), "seed": seed, "trials": trials, "codes": codes, "golden": golden}

    def compute(config):
        report = reproduce_all(
            seed=config.seed,
            trials=trials,
            codes=codes,
            only=only,
            golden=golden,
            budget=config.work_budget,
            workers=config.workers,
        )
        rows = [[result.id, "pass" if result.passed else "FAIL", result.message] for result in report.results]
        text = "\n".join("{:<20} {:<4} {}".format(*row).rstrip() for row in rows)
        output = Output(ReproduceReportSchema().dump(report), text, ["criterion", "status", "message"], rows)
        output.failed = report.failed
        return output

    output = run("reproduce", params, fmt, out, budget, timing, verbose, compute, seed=seed, workers=workers)
    if output.failed:
        raise click.ClickException("Failed criteria: {}".format(", ".join(output.failed)))
