"""Tests for the exhaustive decision-equivalence checker."""

from fractions import Fraction

import pytest

from mdlnfa.equivalence import (
    XI_FAMILIES,
    EnumerationRefused,
    PartSpec,
    check_equivalence,
    kraft_sum,
    make_random_xi,
    mdl_parts_decision,
    nfa_decision,
    part_code_length,
    tail_count,
    xi_count_ones,
    xi_longest_run,
    xi_weighted_sum,
)


def count_ones_part(length=4, eta=16):
    return PartSpec(length=length, eta=Fraction(eta), xi=xi_count_ones,
                    name="count_ones")


class TestTailCount:
    def test_binary_count_ones(self):
        spec = count_ones_part()
        assert tail_count(spec, 2, 4) == 1     # only 1111
        assert tail_count(spec, 2, 0) == 16    # everything
        assert tail_count(spec, 2, 3) == 5     # C(4,3) + C(4,4)

    def test_non_increasing_in_threshold(self):
        spec = count_ones_part()
        counts = [tail_count(spec, 2, t) for t in range(5)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_refuses_oversized_state_space(self):
        spec = PartSpec(length=30, eta=Fraction(1), xi=xi_count_ones)
        with pytest.raises(EnumerationRefused):
            tail_count(spec, 2, 0)


class TestDecisions:
    def test_boundary_case_eta_16(self):
        spec = count_ones_part(eta=16)
        x = (1, 1, 1, 1)
        # eta * P = 16/16 = 1, which is not < 1.
        assert nfa_decision(spec, 2, x) is False
        assert mdl_parts_decision(spec, 2, x) is False

    def test_detection_at_eta_8(self):
        spec = count_ones_part(eta=8)
        x = (1, 1, 1, 1)
        assert nfa_decision(spec, 2, x) is True
        assert mdl_parts_decision(spec, 2, x) is True
        assert part_code_length(spec, 2, x) == pytest.approx(3.0)  # 3 + 0 < 4

    def test_eta_one_detects_everything_but_full_tail(self):
        spec = count_ones_part(eta=1)
        assert nfa_decision(spec, 2, (1, 1, 1, 1)) is True
        assert nfa_decision(spec, 2, (0, 0, 0, 0)) is False  # tail is all 16

    def test_constant_xi_never_selected(self):
        spec = PartSpec(length=4, eta=Fraction(1), xi=lambda v: 7.0)
        for x in [(0, 0, 0, 0), (1, 0, 1, 0)]:
            assert mdl_parts_decision(spec, 2, x) is False
            assert nfa_decision(spec, 2, x) is False


class TestCheckEquivalence:
    def test_standard_families_zero_mismatches(self):
        parts = []
        for length in (4, 6, 8):
            for name, xi in XI_FAMILIES.items():
                parts.append(PartSpec(length=length, eta=Fraction(9),
                                      xi=xi, name=f"{name}_{length}"))
        assert kraft_sum(parts) == 1
        report = check_equivalence(2, parts)
        assert report.total_mismatches == 0
        assert report.total_configs == sum(2**n for n in (4, 6, 8)) * 3

    def test_ternary_random_xi_nonuniform_weights(self):
        etas = [Fraction(2), Fraction(4), Fraction(4)]
        parts = [PartSpec(length=6, eta=eta, xi=make_random_xi(seed), name=f"r{seed}")
                 for seed, eta in enumerate(etas)]
        assert kraft_sum(parts) == 1
        report = check_equivalence(3, parts)
        assert report.total_mismatches == 0
        assert report.total_configs == 3 * 3**6

    def test_single_part_eta_one(self):
        report = check_equivalence(2, [count_ones_part(eta=1)])
        assert report.total_mismatches == 0

    def test_boundary_cases_reported(self):
        # eta = 16 over 16 configurations: only x = 1111 (tail 1) sits exactly
        # on eta * tail = |X|^n.
        report = check_equivalence(2, [count_ones_part(eta=16)])
        assert report.total_boundary_exact == 1
        assert report.total_mismatches == 0

    def test_kraft_violation_refused(self):
        parts = [count_ones_part(eta=2), count_ones_part(eta=2),
                 count_ones_part(eta=2)]
        with pytest.raises(EnumerationRefused):
            check_equivalence(2, parts)

    def test_report_format(self):
        report = check_equivalence(2, [count_ones_part(eta=16)])
        text = report.format()
        assert "kraft sum" in text
        assert "0 mismatches" in text

    def test_alphabet_validation(self):
        with pytest.raises(ValueError):
            check_equivalence(1, [count_ones_part()])
        with pytest.raises(ValueError):
            check_equivalence(2, [])


class TestXiFamilies:
    def test_longest_run(self):
        assert xi_longest_run((0, 0, 1, 1, 1, 0)) == 3.0
        assert xi_longest_run((0, 1, 0, 1)) == 1.0
        assert xi_longest_run((2, 2, 2, 2)) == 4.0

    def test_weighted_sum(self):
        assert xi_weighted_sum((1, 0, 2)) == 1 + 6

    def test_random_xi_deterministic(self):
        xi_a = make_random_xi(42)
        xi_b = make_random_xi(42)
        configs = [(0, 1, 2), (2, 2, 2), (0, 0, 0), (0, 1, 2)]
        assert [xi_a(c) for c in configs] == [xi_b(c) for c in configs]

    def test_part_spec_validation(self):
        with pytest.raises(ValueError):
            PartSpec(length=0, eta=Fraction(1), xi=xi_count_ones)
        with pytest.raises(ValueError):
            PartSpec(length=4, eta=Fraction(0), xi=xi_count_ones)
