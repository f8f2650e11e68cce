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
"""The acceptance suite: every check of the three engines, keyed by criterion id."""

import json
import logging
import os
import typing
from fractions import Fraction

import numpy as np

import combrec.fields as fields
from combrec.codes import min_distance, random_code
from combrec.cycles import (
    enumerate_moments,
    harmonic,
    moment_table,
    propagate_mean,
    propagate_variance,
    sample_cycles,
    stirling_distribution,
    stirling_moment,
    uniformity_report,
)
from combrec.lattice import (
    RepCode,
    WeightSpec,
    brute_force_min_rep,
    compose_minimum,
    is_representative,
    is_representative_brute,
    min_rep_size,
    random_monotone_spec,
    size_bounds,
    subadditive_sweep,
    translate_min_sizes,
)
from combrec.locality import (
    LocalityStructure,
    build_example_code,
    capable_positions,
    compute_T,
    shorten,
    verify_capability,
)
from combrec.schema import RecordSchema
from combrec.utils import LazyProxy, format_rational

logger = logging.getLogger("combrec")

GOLDEN_PATH = os.path.join(os.path.dirname(__file__), "data", "golden.json")
DEFAULT_TRIALS = 10 ** 6
DEFAULT_CODES = 50
EPSILONS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
SE_WINDOW = 4
UNIFORMITY_ALPHA = 1e-4


def _build_example():
    return build_example_code(10)


EXAMPLE = LazyProxy(_build_example)


class RandomCase(object):
    """A random code with an exhaustively verified ``tau = 1`` locality structure."""

    def __init__(self, code, loc):
        self.code = code
        self.loc = loc


def random_cases(seed: int, count: int, budget: typing.Optional[int] = None) -> typing.List[RandomCase]:
    """Draw ``count`` small binary linear codes whose capable positions form a non-empty ``Theta``."""
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(50 * count):
        if len(cases) == count:
            break
        n = int(rng.integers(6, 15))
        k = int(rng.integers(2, min(6, n - 2) + 1))
        r = int(rng.integers(1, 4))
        code = random_code(n, k, q=2, seed=int(rng.integers(2 ** 31)), density=0.35)
        theta = capable_positions(code, r, budget=budget)
        if not theta:
            continue
        loc = LocalityStructure(theta, 1, r, n=n)
        capability = verify_capability(code, loc, budget=budget)
        if not capability.capable:
            raise RuntimeError("Capable positions {} failed exhaustive verification".format(sorted(theta)))
        cases.append(RandomCase(code, loc.with_map(capability.locality_map)))
    if len(cases) < count:
        raise RuntimeError("Drew only {} of {} random codes with capable positions".format(len(cases), count))
    return cases


class CriterionResult(object):
    """Outcome of one acceptance criterion."""

    def __init__(self, id, passed, message="", detail=None):
        self.id = id
        self.passed = passed
        self.message = message
        self.detail = detail or {}

    def __repr__(self):
        return "CriterionResult(id={!r}, passed={})".format(self.id, self.passed)


class ReproduceReport(object):
    def __init__(self, seed, trials, codes, results):
        self.seed = seed
        self.trials = trials
        self.codes = codes
        self.results = results

    @property
    def ok(self):
        return all(result.passed for result in self.results)

    @property
    def failed(self):
        return [result.id for result in self.results if not result.passed]


class CriterionResultSchema(RecordSchema):
    class Meta:
        versioned = False

    id = fields.String()
    passed = fields.Boolean()
    message = fields.String()
    detail = fields.Dict()


class ReproduceReportSchema(RecordSchema):
    seed = fields.Integer()
    trials = fields.Integer()
    codes = fields.Integer()
    ok = fields.Boolean()
    failed = fields.List(fields.String())
    results = fields.Nested(CriterionResultSchema, many=True)


class _Context(object):
    def __init__(self, seed, trials, codes, golden, budget, workers):
        self.seed = seed
        self.trials = trials
        self.codes = codes
        self.golden = golden
        self.budget = budget
        self.workers = workers
        self.cases = LazyProxy(lambda: random_cases(seed, codes, budget=budget))


def _random_codes(ctx):
    violations = []
    nontrivial = 0
    for index, case in enumerate(ctx.cases):
        code, loc = case.code, case.loc
        report = compute_T(code.n, code.k, loc.theta_size, loc.tau, loc.r, code.q, True)
        distance = min_distance(code)
        nontrivial += report.T > 0
        if distance > report.bound:
            violations.append({"case": index, "n": code.n, "k": code.k, "d": distance, "bound": report.bound})
    detail = {"codes": len(ctx.cases), "with_T_positive": nontrivial, "violations": violations}
    return not violations, "{} violations".format(len(violations)), detail


def _example(ctx):
    code, loc = EXAMPLE
    capable = verify_capability(code, loc)
    full = verify_capability(code, LocalityStructure(range(code.n), 1, 3, loc.locality_map, n=code.n))
    report = compute_T(code.n, code.k, loc.theta_size, loc.tau, loc.r, 2, True)
    detail = {
        "n": code.n,
        "words": code.size,
        "capable": capable.capable,
        "full_capable": full.capable,
        "counterexample": [p + 1 for p in full.counterexample] if full.counterexample else None,
        "T": report.T,
        "bound": report.bound,
    }
    passed = (
        code.n == 131
        and code.size == 1024
        and capable.capable
        and not full.capable
        and detail["counterexample"] == [131]
        and report.T == 2
        and report.bound == 120
    )
    return passed, "" if passed else "example parameters differ", detail


def _trace_violations(code, loc, name, require_T):
    trace = shorten(code, loc)
    distance = min_distance(code)
    problems = []
    for j, step in enumerate(trace.steps, start=1):
        if step.subcode_size * code.q ** (j * loc.r) < code.size:
            problems.append("{}: iteration {} subcode {} below q^(k - j r)".format(name, j, step.subcode_size))
    if not all(trace.size_invariants()):
        problems.append("{}: subcode size below q^(k - sum m)".format(name))
    if not all(trace.reach_invariants()):
        problems.append("{}: reach smaller than j tau".format(name))
    if trace.certified_bound < distance:
        problems.append("{}: certified bound {} below distance {}".format(name, trace.certified_bound, distance))
    if trace.final_code.size >= 2 and min_distance(trace.final_code, method="pairwise") < distance:
        problems.append("{}: reduced code distance below the code distance".format(name))
    if require_T and trace.iterations < trace.guaranteed_T:
        problems.append("{}: {} iterations, fewer than T={}".format(name, trace.iterations, trace.guaranteed_T))
    return trace, problems


def _shortening(ctx):
    code, loc = EXAMPLE
    trace, problems = _trace_violations(code, loc, "example", True)
    for index, case in enumerate(ctx.cases):
        problems.extend(_trace_violations(case.code, case.loc, "case {}".format(index), False)[1])
    detail = {
        "example_iterations": trace.iterations,
        "example_certified_bound": trace.certified_bound,
        "codes": len(ctx.cases),
        "violations": problems,
    }
    return not problems, "{} violations".format(len(problems)), detail


def _specs(ctx):
    rng = np.random.default_rng(ctx.seed)
    betas = [Fraction(3, 2), Fraction(2), Fraction(3)]
    specs = [("uniform", WeightSpec.uniform()), ("shell", WeightSpec.shell())]
    for i in range(20):
        beta = betas[int(rng.integers(len(betas)))]
        specs.append(("random-{}".format(i), random_monotone_spec(ctx.seed + i, beta=beta)))
    return specs


def _lattices(ctx):
    for name, spec in _specs(ctx):
        for d in (1, 2):
            for m in range(1, 17):
                yield name, spec.square(m, d)


def _bounds(ctx):
    violations = []
    checked = 0
    for name, lattice in _lattices(ctx):
        for epsilon in EPSILONS:
            b, _ = min_rep_size(lattice, epsilon)
            lower, upper = size_bounds(lattice, epsilon)
            checked += 1
            if not lower <= b <= upper:
                violations.append({"spec": name, "shape": list(lattice.shape), "epsilon": format_rational(epsilon)})
    return not violations, "{} of {} lattices out of bounds".format(len(violations), checked), {
        "lattices": checked,
        "violations": violations,
    }


def _oracle(ctx):
    rng = np.random.default_rng(ctx.seed)
    disagreements = []
    sizes = representatives = 0
    for name, lattice in _lattices(ctx):
        if lattice.size > 16:
            continue
        for epsilon in EPSILONS:
            b, witness = min_rep_size(lattice, epsilon)
            sizes += 1
            if b != brute_force_min_rep(lattice, epsilon):
                disagreements.append("{} {} eps={}: minimum size".format(name, lattice.shape, epsilon))
            if lattice.size > 12:
                continue
            candidates = [witness.points, lattice.points]
            if witness.points:
                candidates.append(witness.points - {min(witness.points)})
            for _ in range(3):
                mask = rng.random(lattice.size) < 0.5
                candidates.append([p for p, keep in zip(lattice.points, mask) if keep])
            for points in candidates:
                code = RepCode(points, epsilon)
                representatives += 1
                if is_representative(lattice, code) != is_representative_brute(lattice, code):
                    disagreements.append("{} {} eps={}: representativeness".format(name, lattice.shape, epsilon))
    detail = {"size_checks": sizes, "representative_checks": representatives, "disagreements": disagreements}
    return not disagreements, "{} disagreements".format(len(disagreements)), detail


def _subadditivity(ctx):
    spec = WeightSpec.shell()
    epsilon = Fraction(1, 2)
    sweep = subadditive_sweep(spec, epsilon, 2, [2, 4, 8, 16])
    problems = ["ratio increases from m={} to m={}".format(r, m) for r, m, ok in sweep.multiples if not ok]

    compositions = 0
    for m in range(2, 17):
        lattice = spec.square(m, 2)
        for r in range(1, m + 1):
            composition = compose_minimum(lattice, r, epsilon)
            compositions += 1
            if not composition.representative:
                problems.append("composition m={} r={} is not representative".format(m, r))
            if composition.size > composition.bound:
                problems.append("composition m={} r={} exceeds its size bound".format(m, r))

    for m, r in ((4, 2), (8, 2), (8, 4)):
        sizes = translate_min_sizes(spec.square(m, 2), r, epsilon)
        origin = sizes[(0, 0)]
        if any(size > origin for size in sizes.values()):
            problems.append("a translate of the first {}-block needs more points for m={}".format(r, m))

    detail = {
        "ratios": {str(row.m): format_rational(row.ratio) for row in sweep.rows},
        "compositions": compositions,
        "violations": problems,
    }
    return not problems, "{} violations".format(len(problems)), detail


def _moments(ctx):
    table = moment_table(12, 4)
    problems = []
    for n, s, value in table.cells():
        if value != stirling_moment(n, s):
            problems.append("mu[{}][{}] differs from the Stirling moment".format(n, s))
    for n in range(1, 8):
        enumerated = enumerate_moments(n, 4, budget=ctx.budget)
        for s in range(1, 5):
            if table[n, s] != enumerated[s]:
                problems.append("mu[{}][{}] differs from full enumeration".format(n, s))
    for n in range(1, 13):
        if sum(stirling_distribution(n).values()) != 1:
            problems.append("Stirling distribution for n={} does not sum to 1".format(n))
    expected = {(3, 1): Fraction(11, 6), (3, 2): Fraction(23, 6)}
    for (n, s), value in expected.items():
        if table[n, s] != value:
            problems.append("mu[{}][{}] is {}, expected {}".format(n, s, table[n, s], value))
    v2 = table[2, 2] - table[2, 1] ** 2
    v3 = table[3, 2] - table[3, 1] ** 2
    if v2 != Fraction(1, 4) or v3 != Fraction(17, 36):
        problems.append("variances from the table are {} and {}".format(v2, v3))
    return not problems, "{} mismatches".format(len(problems)), {"cells": 48, "violations": problems}


def _closed_forms(ctx, n_max=1000):
    harmonics = []
    variances = []
    h = h2 = Fraction(0)
    for n in range(1, n_max + 1):
        h += Fraction(1, n)
        h2 += Fraction(1, n * n)
        harmonics.append(h)
        variances.append(h - h2)

    problems = []
    if propagate_mean(1, n_max) != harmonics:
        problems.append("mean recursion does not reproduce H_n")
    if propagate_variance(0, n_max) != variances:
        problems.append("variance recursion does not reproduce M_n")
    perturbed = propagate_mean(2, n_max)
    if any(b == h for b, h in zip(perturbed, harmonics)):
        problems.append("propagation from b_1 = 2 meets H_n")
    table = moment_table(12, 2)
    for n in range(1, 13):
        if table[n, 1] != harmonics[n - 1] or table[n, 2] - table[n, 1] ** 2 != variances[n - 1]:
            problems.append("closed forms differ from the moment table at n={}".format(n))
    return not problems, "{} mismatches".format(len(problems)), {"n_max": n_max, "violations": problems}


def _monte_carlo(ctx):
    sample = sample_cycles(8, ctx.trials, seed=ctx.seed, workers=ctx.workers)
    small = sample_cycles(4, ctx.trials, seed=ctx.seed + 1, workers=ctx.workers)
    uniformity = uniformity_report(small)
    first_errors = sample.first_cycle_errors()
    induced = small.induced_errors(2)

    problems = []
    if sample.mean_error() > SE_WINDOW:
        problems.append("mean of N_8 is {:.2f} standard errors from H_8".format(sample.mean_error()))
    problems.extend(
        "P(L_1 = {}) is {:.2f} standard errors from 1/8".format(k, e) for k, e in first_errors.items() if e > SE_WINDOW
    )
    problems.extend(
        "induced permutation {} is {:.2f} standard errors from 1/2".format(s, e)
        for s, e in induced.items()
        if e > SE_WINDOW
    )
    if not uniformity.passed(UNIFORMITY_ALPHA):
        problems.append("shuffle of 4 elements fails the chi-square test (p={:.3g})".format(uniformity.pvalue))
    detail = {
        "mean": sample.mean,
        "mean_error": sample.mean_error(),
        "max_first_cycle_error": max(first_errors.values()),
        "max_induced_error": max(induced.values()),
        "chi_square_pvalue": uniformity.pvalue,
        "violations": problems,
    }
    return not problems, "{} violations".format(len(problems)), detail


DETERMINISM_SUBSET = ("lrc.random-codes", "cyc.moments", "cyc.monte-carlo")


def _determinism(ctx):
    def dump(workers):
        report = reproduce_all(
            seed=ctx.seed,
            trials=min(ctx.trials, 20_000),
            codes=min(ctx.codes, 3),
            only=DETERMINISM_SUBSET,
            golden=ctx.golden,
            budget=ctx.budget,
            workers=workers,
        )
        return json.dumps(ReproduceReportSchema().dump(report), sort_keys=True, indent=2)

    first, second, threaded = dump(1), dump(1), dump(2)
    passed = first == second == threaded
    detail = {"criteria": list(DETERMINISM_SUBSET), "bytes": len(first)}
    return passed, "" if passed else "repeated reports differ", detail


def _golden(ctx):
    try:
        with open(ctx.golden, encoding="utf-8") as f:
            golden = json.load(f)
        if golden.get("format") != 1:
            raise ValueError("unsupported golden format {!r}".format(golden.get("format")))
        example = golden["example"]
        means = {int(n): Fraction(v) for n, v in golden["mean"].items()}
        variances = {int(n): Fraction(v) for n, v in golden["variance"].items()}
        moments = {tuple(int(x) for x in key.split(",")): Fraction(v) for key, v in golden["moments"].items()}
    except (OSError, ValueError, KeyError, TypeError, AttributeError) as e:
        return False, "golden file {} is unreadable: {}".format(ctx.golden, e), {}

    code, loc = EXAMPLE
    report = compute_T(code.n, code.k, loc.theta_size, loc.tau, loc.r)
    actual = {
        "k": code.k,
        "n": code.n,
        "words": code.size,
        "min_distance": min_distance(code),
        "T": report.T,
        "bound": report.bound,
        "singleton": report.singleton,
    }
    mismatches = ["example {}".format(key) for key, value in example.items() if actual.get(key) != value]
    mismatches += ["mean {}".format(n) for n, value in means.items() if harmonic(n) != value]
    mismatches += ["variance {}".format(n) for n, v in variances.items() if harmonic(n) - harmonic(n, 2) != v]
    table = moment_table(max(n for n, _ in moments), max(s for _, s in moments))
    mismatches += ["moment {},{}".format(n, s) for (n, s), value in moments.items() if table[n, s] != value]
    return not mismatches, "{} golden mismatches".format(len(mismatches)), {"mismatches": mismatches}


CRITERIA = [
    ("lrc.random-codes", _random_codes),
    ("lrc.example", _example),
    ("lrc.shortening", _shortening),
    ("rep.bounds", _bounds),
    ("rep.oracle", _oracle),
    ("rep.subadditivity", _subadditivity),
    ("cyc.moments", _moments),
    ("cyc.closed-forms", _closed_forms),
    ("cyc.monte-carlo", _monte_carlo),
    ("determinism", _determinism),
    ("golden", _golden),
]


#: ``--only`` aliases for whole criterion groups.
GROUP_ALIASES = {"thm1": "lrc.", "thm2": "rep.", "thm3": "cyc."}


def select(only: typing.Optional[typing.Iterable[str]] = None) -> typing.List[str]:
    """Criterion ids matching any of the given prefixes or group aliases, in suite order.

    >>> select(["thm3"])
    ['cyc.moments', 'cyc.closed-forms', 'cyc.monte-carlo']
    """
    ids = [name for name, _ in CRITERIA]
    if not only:
        return ids
    only = list(only)
    prefixes = [GROUP_ALIASES.get(prefix, prefix) for prefix in only]
    selected = [name for name in ids if any(name.startswith(prefix) for prefix in prefixes)]
    if not selected:
        raise ValueError("No criterion matches {}; known criteria are {}".format(only, ids))
    return selected


def reproduce_all(
    seed: int = 42,
    trials: int = DEFAULT_TRIALS,
    codes: int = DEFAULT_CODES,
    only: typing.Optional[typing.Iterable[str]] = None,
    golden: str = GOLDEN_PATH,
    budget: typing.Optional[int] = None,
    workers: int = 1,
) -> ReproduceReport:
    """Run the selected criteria; a criterion raising an error counts as failed."""
    if trials < 1 or codes < 1:
        raise ValueError("trials and codes must be positive, got {} and {}".format(trials, codes))
    selected = set(select(only))
    ctx = _Context(seed, trials, codes, golden, budget, workers)
    results = []
    for name, check in CRITERIA:
        if name not in selected:
            continue
        logger.info("Running criterion %s", name)
        try:
            passed, message, detail = check(ctx)
        except Exception as e:
            logger.debug("Criterion %s raised", name, exc_info=True)
            passed, message, detail = False, "{}: {}".format(type(e).__name__, e), {}
        results.append(CriterionResult(name, bool(passed), message, detail))
    return ReproduceReport(seed, trials, codes, results)
