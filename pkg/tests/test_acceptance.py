"""Acceptance suite: one pass/fail line per criterion.

Run with `pytest tests/test_acceptance.py -v -s`.  The whole module takes a
few minutes on one core; the stochastic criteria use fixed base seeds so the
outcome is reproducible bit-for-bit.

Criterion 6c is known-red: it demands that the a-contrario score stop
detecting oversized squares (side > 71 on a 100x100 image) at low noise,
but with the candidate at the true location both criteria detect with
thousands of bits to spare in that regime; the binomial-tail NFA only loses
the square when the complement rim becomes statistically invisible, which
happens for side >= ~98 at low noise (see
test_oversized_square_divergence_regime) or at high noise for side >= ~85.
The criterion is asserted as stated and fails; the companion test documents
where the real divergence lives.
"""

import math
import time

import numpy as np
import pytest

from mdlnfa.experiments import (
    MultiSweepConfig,
    ShapeSpec,
    SingleSweepConfig,
    h0_false_alarm_counts,
    lsd_boundary_table,
    make_shape_instance,
    run_equivalence,
    run_polygon,
    run_sweep_multi,
    run_sweep_single,
)
from mdlnfa.lsd import LsdConfig
from mdlnfa.numeric import binomial_tail_log, hoeffding_tail_bound
from oracles import exact_log2_binomial_tail, split_term_extrema_table


def record(num, ok, detail):
    print(f"\n[ACCEPTANCE] criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


# ---------------------------------------------------------------------------
# 1. Decision equivalence, exhaustively
# ---------------------------------------------------------------------------

def test_criterion_1_equivalence():
    start = time.time()
    reports = run_equivalence()
    mismatches = sum(r.total_mismatches for r in reports)
    configs = sum(r.total_configs for r in reports)
    boundary = sum(r.total_boundary_exact for r in reports)
    elapsed = time.time() - start
    record(1, mismatches == 0 and elapsed < 60,
           f"{mismatches} mismatches over {configs} configurations "
           f"({boundary} boundary-exact), {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. Hoeffding bound dominates the exact tail
# ---------------------------------------------------------------------------

def test_criterion_2_hoeffding_dominance():
    rng = np.random.default_rng(2024)
    violations = 0
    accepted = 0
    while accepted < 10_000:
        n = int(rng.integers(1, 1001))
        q = float(rng.uniform(0.001, 0.999))
        k = int(rng.integers(1, n + 1))
        if not k / n > q:
            continue
        accepted += 1
        if binomial_tail_log(n, k, q) > hoeffding_tail_bound(n, k, q) + 1e-9:
            violations += 1
    record(2, violations == 0,
           f"{violations} violations in {accepted} random (n, k, q) triples")


# ---------------------------------------------------------------------------
# 3. Exact-tail oracle agreement
# ---------------------------------------------------------------------------

def test_criterion_3_tail_oracle():
    worst = 0.0
    cases = 0
    for n in range(1, 26):
        for k in range(n + 1):
            for q in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
                expected = exact_log2_binomial_tail(n, k, q)
                got = binomial_tail_log(n, k, q)
                cases += 1
                # Relative error of the tail probability itself (the log2
                # values may both be ~0 where the tail is ~1).
                err = abs(math.expm1(math.log(2.0) * (got - expected)))
                worst = max(worst, err)
    record(3, worst <= 1e-9,
           f"max relative error {worst:.2e} over {cases} exact-rational cases")


# ---------------------------------------------------------------------------
# 4. Stirling accuracy
# ---------------------------------------------------------------------------

def test_criterion_4_stirling_accuracy():
    from mdlnfa.numeric import log_binomial, stirling_log_binomial
    ns = sorted(set(np.geomspace(100, 10_000, 30).astype(int)))
    worst = 0.0
    for n in ns:
        ks = np.arange(10, n - 9)
        diff = np.abs(stirling_log_binomial(n, ks) - log_binomial(n, ks))
        worst = max(worst, float(diff.max()))
    record(4, worst < 0.2,
           f"max |approx - exact| = {worst:.4f} bits over n in [100, 10^4], "
           f"min(k, n-k) >= 10")


# ---------------------------------------------------------------------------
# 5. Residual-term bounds, exhaustive over splits
# ---------------------------------------------------------------------------

def test_criterion_5_residual_term_bounds():
    start = time.time()
    upper_ok = True
    confirmed_ok = True
    half_log_fails = 0
    log_fails = 0
    for n in range(8, 201):
        lo, hi = split_term_extrema_table(n)
        upper = math.log2(n**2.5 / (4 * (n - 2))) - 1
        upper_ok &= hi <= upper + 1e-9
        # The exhaustively confirmed lower bound: the extreme split
        # (n0=2, k0=1, k=n/2) attains 0.5*log2(8(n-2)/n) < 1.5 bits, below
        # both advertised candidates 0.5*log2(n) and log2(n).
        confirmed = 0.5 * math.log2(8 * (n - 2) / n)
        confirmed_ok &= lo >= confirmed - 1e-9
        if n % 2 == 0:
            confirmed_ok &= abs(lo - confirmed) < 1e-9
        half_log_fails += lo < 0.5 * math.log2(n) - 1e-9
        log_fails += lo < math.log2(n) - 1e-9
    elapsed = time.time() - start
    record(5, upper_ok and confirmed_ok and elapsed < 60,
           f"upper bound log2(n^2.5/(4(n-2)))-1 holds for all n in [8,200]; "
           f"lower-bound discrepancy resolved: both 0.5*log2(n) "
           f"(fails {half_log_fails}/193) and log2(n) (fails {log_fails}/193) "
           f"are refuted, exhaustive minimum is 0.5*log2(8(n-2)/n), "
           f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 6. Single-square detection-rate grid
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def detection_rate_grid():
    return run_sweep_single(SingleSweepConfig(seeds_per_cell=100, base_seed=6))


def test_criterion_6a_agreement_below_half_area(detection_rate_grid):
    cells = [c for c in detection_rate_grid.cells if c.side < 70]
    agreeing = sum(c.agree_rate >= 0.9 for c in cells) / len(cells)
    record("6a", agreeing >= 0.9,
           f"{agreeing:.1%} of side<70 cells have >=90% per-seed agreement "
           f"({len(cells)} cells, 100 seeds each)")


def test_criterion_6b_nfa_at_least_as_sensitive(detection_rate_grid):
    cells = [c for c in detection_rate_grid.cells if c.side < 70]
    frac = sum(c.nfa_rate >= c.mdl_rate for c in cells) / len(cells)
    record("6b", frac >= 0.95,
           f"NFA detection rate >= MDL rate in {frac:.1%} of side<70 cells")


def test_detection_region_nesting(detection_rate_grid):
    # Cells (side < 70) where MDL detects in a majority of seeds must be a
    # subset of those where NFA does, up to a 2% allowance for cells sitting
    # on the stochastic decision boundary.
    cells = [c for c in detection_rate_grid.cells if c.side < 70]
    violations = sum(1 for c in cells if c.mdl_rate >= 0.5 > c.nfa_rate)
    frac = violations / len(cells)
    print(f"\n[ACCEPTANCE] nesting invariant: {violations} violations "
          f"({frac:.1%} of {len(cells)} cells, allowance 2%)")
    assert frac <= 0.02


def test_criterion_6c_oversized_squares_at_low_noise(detection_rate_grid):
    # As stated: side > 71 and delta <= 0.2 should give NFA rate < 10% and
    # MDL rate > 90%.  The exact scores contradict this: with the candidate
    # at the true square, both tails are astronomically small there (e.g.
    # side 75, delta 0.1: the square holds ~5060 of ~5500 ones against a
    # 0.55 background density, over 2000 bits below threshold), so the NFA
    # rate is 1.0, not < 0.1.  Asserted faithfully; expected to fail.
    cells = [c for c in detection_rate_grid.cells if c.side > 71 and c.delta <= 0.2]
    nfa_quiet = all(c.nfa_rate < 0.10 for c in cells)
    mdl_active = all(c.mdl_rate > 0.90 for c in cells)
    worst_nfa = max(c.nfa_rate for c in cells)
    record("6c", nfa_quiet and mdl_active,
           f"{len(cells)} cells with side>71, delta<=0.2: max NFA rate "
           f"{worst_nfa:.2f} (required < 0.10), min MDL rate "
           f"{min(c.mdl_rate for c in cells):.2f} (required > 0.90)")


def test_oversized_square_divergence_regime():
    # Companion to 6c: the phenomenon it describes (NFA blind, MDL seeing
    # the rim) does occur, but only once the square leaves almost no
    # background: side 99 of 100 at moderate noise.
    cfg = SingleSweepConfig(sides=(99,), deltas=(0.14, 0.16, 0.18, 0.2),
                            seeds_per_cell=100, base_seed=6)
    cells = run_sweep_single(cfg).cells
    ok = all(c.nfa_rate < 0.10 and c.mdl_rate > 0.90 for c in cells)
    rates = ", ".join(f"d={c.delta:.2f}: nfa={c.nfa_rate:.2f}/mdl={c.mdl_rate:.2f}"
                      for c in cells)
    print(f"\n[ACCEPTANCE] criterion 6c companion (side 99): {rates}")
    assert ok


# ---------------------------------------------------------------------------
# 7. Multi-square selection thresholds
# ---------------------------------------------------------------------------

def last_value(cells, criterion, labels=("four", "large", "single")):
    picked = None
    for cell in cells:
        majority = cell.majority_mdl if criterion == "mdl" else cell.majority_nfa
        if majority in labels:
            picked = cell.value
    return picked


def test_criterion_7_multi_square_thresholds():
    cfg = MultiSweepConfig(seeds_per_cell=20, base_seed=7)
    noise_cells = run_sweep_multi(cfg, "noise")
    nfa_noise = last_value(noise_cells, "nfa", labels=("four",))
    mdl_noise = last_value(noise_cells, "mdl", labels=("four",))

    margin_low = run_sweep_multi(
        MultiSweepConfig(seeds_per_cell=20, base_seed=7, margin_delta=0.2),
        "margin")
    low_mdl = last_value(margin_low, "mdl")
    low_nfa = last_value(margin_low, "nfa")

    margin_high = run_sweep_multi(
        MultiSweepConfig(seeds_per_cell=20, base_seed=7, margin_delta=0.4),
        "margin")
    high_mdl = last_value(margin_high, "mdl", labels=("large",))
    high_nfa = last_value(margin_high, "nfa", labels=("large",))

    ok_noise = (nfa_noise is not None and 0.36 <= nfa_noise <= 0.44
                and mdl_noise is not None and mdl_noise <= nfa_noise
                and nfa_noise - mdl_noise <= 0.05 + 1e-9)
    ok_low = (low_mdl is not None and 14 <= low_mdl <= 18
              and low_nfa is not None and 14 <= low_nfa <= 18)
    ok_high = (high_nfa is not None and 6 <= high_nfa <= 10
               and high_mdl is not None and 4 <= high_mdl <= 8
               and high_nfa >= high_mdl)
    record(7, ok_noise and ok_low and ok_high,
           f"noise axis: four-square majority to delta {mdl_noise} (MDL) / "
           f"{nfa_noise} (NFA); margin axis at delta 0.2: thresholds "
           f"{low_mdl} (MDL) / {low_nfa} (NFA); at delta 0.4: large-square "
           f"to margin {high_mdl} (MDL) / {high_nfa} (NFA)")


# ---------------------------------------------------------------------------
# 8. BSS minima are interior and close between criteria
# ---------------------------------------------------------------------------

def test_criterion_8_polygon_bss():
    specs = [ShapeSpec(seed=0),
             ShapeSpec(seed=1, harmonics=((2, 5.0), (5, 4.0))),
             ShapeSpec(seed=2, harmonics=((3, 7.0), (4, 3.0)), delta=0.2)]
    details = []
    ok = True
    for spec in specs:
        start = time.time()
        image, initial = make_shape_instance(spec)
        trajectories = run_polygon(image, initial)
        counts = {}
        for criterion, traj in trajectories.items():
            chosen = traj.chosen.vertex_count
            counts[criterion] = chosen
            interior = 3 < chosen < initial.c
            ok &= interior
        rel = (abs(counts["mdl"] - counts["nfa"])
               / max(counts["mdl"], counts["nfa"]))
        ok &= rel <= 0.25
        elapsed = time.time() - start
        ok &= elapsed < 60
        details.append(f"shape {spec.seed}: {initial.c}->"
                       f"{counts['mdl']}/{counts['nfa']} (mdl/nfa, "
                       f"rel diff {rel:.0%}, {elapsed:.0f}s)")
    record(8, ok, "; ".join(details))


# ---------------------------------------------------------------------------
# 9. Line-segment detection boundary table
# ---------------------------------------------------------------------------

def test_criterion_9_lsd_boundary_table():
    cfg = LsdConfig.from_theta(0.125)
    rows = lsd_boundary_table(cfg, n_image=512 * 512, max_n_r=60)
    ok = True
    detectable_started = {"nfa": False, "mdl": False}
    prev = {"nfa": None, "mdl": None}
    for row in rows:
        for crit, value in (("nfa", row.min_k_nfa), ("mdl", row.min_k_mdl)):
            if value is None:
                ok &= not detectable_started[crit]  # contiguous suffix
                continue
            detectable_started[crit] = True
            if prev[crit] is not None:
                ok &= value >= prev[crit]           # monotone in n_r
            prev[crit] = value
        if row.min_k_mdl is not None:
            ok &= row.min_k_nfa is not None and row.min_k_nfa <= row.min_k_mdl
    row_40 = next(r for r in rows if r.n_r == 40)
    ok &= row_40.min_k_nfa is not None and row_40.min_k_nfa <= 30
    ok &= row_40.min_k_mdl is not None and row_40.min_k_mdl <= 30
    record(9, ok,
           f"n_r in [4,60] at n=512^2, theta=0.125, gamma=1: NFA boundary <= "
           f"MDL boundary everywhere, both monotone; at n_r=40 minimal "
           f"aligned counts are {row_40.min_k_nfa} (NFA) / "
           f"{row_40.min_k_mdl} (MDL), so (40, 30) is detected by both")


# ---------------------------------------------------------------------------
# 10. False-alarm control on isotropic orientation maps
# ---------------------------------------------------------------------------

def test_criterion_10_h0_false_alarm_control():
    counts = h0_false_alarm_counts(LsdConfig(), n_maps=100, width=256,
                                   height=256, base_seed=10)
    mean = sum(counts) / len(counts)
    record(10, mean <= 1.5,
           f"mean NFA detections over {len(counts)} isotropic 256x256 maps: "
           f"{mean:.3f} (max single-map count {max(counts)})")
