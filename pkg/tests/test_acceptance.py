"""End-to-end acceptance checks for the forests model and the diagnostics.

Each test prints a single pass/fail line with its measured quantities, then
asserts.  The random-number usage is fully seeded, so every run reproduces
the same numbers.
"""

import json
import math
import random
import time
from fractions import Fraction

import pytest

from polyagibbs import (
    Enumerator,
    GibbsModel,
    diagnose_subexponential,
    forests,
    coefficient_ratio_experiment,
    multinomial_radius,
    multiset_ogf,
    multiset_ogf_product,
    ogf,
    polya_trees,
    series_from_terms,
    remainder_convergence_experiment,
    component_count_experiment,
    tv_distance,
)
from polyagibbs.cli import main
from polyagibbs.series import radius_estimate

F = Fraction

FOREST_DSL = "T := ATOM * SET(T); F := COMPOSE(SET, T);"


@pytest.fixture(scope="module")
def forest_model():
    return GibbsModel.from_species(forests(), truncation=200)


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_1_coefficient_oracle_equivalence(capsys):
    t0 = time.monotonic()
    code = main(["coeffs", "--spec", FOREST_DSL, "--trunc", "12"])
    out = capsys.readouterr().out
    elapsed = time.monotonic() - t0
    doc = json.loads(out)
    rows = {r[0]: r for r in doc["rows"]}

    tree_en = Enumerator(polya_trees())
    forest_en = Enumerator(forests())
    exact = True
    for n in range(13):
        inner = sum(w for _, w in tree_en.enumerate_root(n))
        comp = sum(w for _, w in forest_en.enumerate_root(n))
        exact = exact and rows[n][1] == str(inner) and rows[n][2] == str(comp)
    known = all(
        rows[n][1] == str(v)
        for n, v in enumerate([1, 1, 2, 4, 9, 20, 48, 115, 286, 719], start=1)
    )
    ok = code == 0 and exact and known and elapsed < 10
    with capsys.disabled():
        report(
            "criterion 1 (coefficient oracle)",
            ok,
            f"CLI vs enumeration exact for n<=12, {elapsed:.1f}s",
        )


def test_2_two_path_ogf_identity():
    t0 = time.monotonic()
    n = 200
    eng = GibbsModel.from_species(forests(), truncation=n).engine
    inner_node = GibbsModel.from_species(forests(), truncation=n).inner_node

    def fam(i):
        return eng.ogf(max(n // i, 1), node=inner_node, power=i)

    via_exp = multiset_ogf(fam, n)
    via_plethysm = multiset_ogf_product(fam, n)
    engine_series = eng.ogf(n)
    elapsed = time.monotonic() - t0
    agree = via_exp == via_plethysm == engine_series
    ok = agree and elapsed < 60
    report(
        "criterion 2 (two-path identity)",
        ok,
        f"coefficients equal (exact) to n=200 on both paths, {elapsed:.1f}s",
    )


def test_3_sampler_law_check(forest_model):
    t0 = time.monotonic()
    n, samples = 8, 100_000
    table = Enumerator(forests()).enumerate_root(n)
    total = sum(w for _, w in table)
    exact = {o: float(w / total) for o, w in table}
    rng = random.Random(2024)
    counts = {}
    for _ in range(samples):
        s = forest_model.sample_S_n(n, rng, method="rejection")
        counts[s] = counts.get(s, 0) + 1
    tv = 0.5 * sum(
        abs(counts.get(o, 0) / samples - p) for o, p in exact.items()
    )
    radius = multinomial_radius(len(table), samples, delta=0.01)
    elapsed = time.monotonic() - t0
    ok = tv < radius and elapsed < 300
    report(
        "criterion 3 (sampler law)",
        ok,
        f"TV={tv:.4f} < radius={radius:.4f} over {len(table)} orbits, "
        f"{elapsed:.0f}s",
    )


def test_4_ratio_limit_constant():
    t0 = time.monotonic()
    m400 = GibbsModel.from_species(forests(), truncation=400)
    m800 = GibbsModel.from_species(forests(), truncation=800)
    rep400 = coefficient_ratio_experiment(m400)
    rep800 = coefficient_ratio_experiment(m800)
    half, top = sorted(rep800.deviation)
    dev800 = rep800.deviation[top]
    dev400 = rep400.deviation[max(rep400.deviation)]
    paths = rep800.constant_paths
    rel = abs(paths["cycle_index"] / paths["species_engine"] - 1.0)
    elapsed = time.monotonic() - t0
    ok = dev800 < 0.02 and dev800 < dev400 and rel < 1e-6 and elapsed < 300
    report(
        "criterion 4 (ratio limit)",
        ok,
        f"deviation {dev800:.4%} (N=800) < {dev400:.4%} (N=400) < 2%, "
        f"two-path constants agree to {rel:.2e}, {elapsed:.0f}s",
    )


def test_5_remainder_tv_trend(forest_model):
    rep = remainder_convergence_experiment(
        forest_model,
        sizes=[20, 40, 80],
        samples=100_000,
        cap=12,
        seed=1729,
        workers=4,
    )
    tvs = [r.tv for r in rep.rows]
    radii = [r.radius for r in rep.rows]
    beyond = all(
        tvs[i] - tvs[i + 1] > radii[i] + radii[i + 1] for i in range(2)
    )
    ok = rep.decreasing and beyond
    report(
        "criterion 5 (remainder TV trend)",
        ok,
        "TV " + " > ".join(f"{t:.4f}" for t in tvs) + f", radii ~{radii[0]:.4f}",
    )


def test_6_component_count_trend(forest_model):
    reps = [
        component_count_experiment(
            forest_model, n=n, samples=100_000, seed=56, cap=20, workers=4
        )
        for n in (20, 40)
    ]
    norm = reps[0].exact_law_total
    ok = reps[1].tv < reps[0].tv and abs(norm - 1.0) < 1e-6
    report(
        "criterion 6 (component counts)",
        ok,
        f"TV {reps[1].tv:.4f} (n=40) < {reps[0].tv:.4f} (n=20), "
        f"law total {norm:.9f}",
    )


def test_7_cycle_statistics_pgf(forest_model):
    rep = forest_model.cycle_statistics_pgf_check(
        0.7, 0.9, samples=100_000, rng=random.Random(271828)
    )
    ok = rep.sigmas < 3.0
    report(
        "criterion 7 (joint transform)",
        ok,
        f"MC {rep.estimate:.5f} vs exact {rep.exact:.5f} "
        f"({rep.sigmas:.2f} standard errors)",
    )


def test_8_subexponential_diagnostics():
    def series(n):
        return series_from_terms(
            [(k, F(1, k**3) * F(1, 2) ** k) for k in range(1, n + 1)], n
        )

    g800 = series(800)
    rho = radius_estimate(g800).rho
    rep = diagnose_subexponential(g800)
    half, top = sorted(rep.ratio_deviation)
    shrink = (
        rep.ratio_deviation[top] < rep.ratio_deviation[half]
        and rep.convolution_deviation[top] < rep.convolution_deviation[half]
    )
    ok = abs(rho - 2.0) < 1e-3 and shrink
    report(
        "criterion 8 (subexponential diagnostics)",
        ok,
        f"radius {rho:.6f}, ratio dev {rep.ratio_deviation[half]:.4f} -> "
        f"{rep.ratio_deviation[top]:.4f}, convolution dev "
        f"{rep.convolution_deviation[half]:.4f} -> "
        f"{rep.convolution_deviation[top]:.4f}",
    )


def test_9_bytewise_determinism(tmp_path, capsys):
    argv = [
        "sample", "--spec", FOREST_DSL, "--trunc", "100",
        "--sizes", "10", "--samples", "400", "--seed", "31337",
    ]
    outputs = []
    for i, workers in enumerate(("1", "1", "4")):
        path = tmp_path / f"run{i}.jsonl"
        code = main(argv + ["--workers", workers, "--out", str(path)])
        assert code == 0
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    with capsys.disabled():
        report(
            "criterion 9 (determinism)",
            ok,
            f"{len(outputs[0])} bytes identical across reruns and workers 1/4",
        )
