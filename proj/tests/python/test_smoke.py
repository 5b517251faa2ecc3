import math
from fractions import Fraction

import pytest

import laclab


def test_sequences_are_exact_ints():
    assert laclab.sequence("geometric", theta=2, length=5) == [2, 4, 8, 16, 32]
    big = laclab.sequence("superlacunary-square", theta=3, length=6)
    assert big[-1] == 3 ** 36


def test_gcd_sum_matches_pairwise_enumeration():
    terms = [2, 4, 6, 9, 12]
    expected = sum(
        Fraction(math.gcd(a, b) ** 2, a * b)
        for i, a in enumerate(terms)
        for b in terms[i:]
    )
    assert laclab.gcd_sum(terms) == expected


def test_discrepancy_examples():
    assert laclab.discrepancy([0.2, 0.4, 0.6, 0.8]) == pytest.approx(0.4, abs=1e-15)
    assert laclab.star_discrepancy([0.125, 0.375, 0.625, 0.875]) == pytest.approx(0.125, abs=1e-15)
    with pytest.raises(ValueError):
        laclab.discrepancy([])


def test_reference_values():
    assert laclab.kolmogorov_cdf(1.0) == pytest.approx(0.730000328322645479, abs=1e-12)
    assert laclab.normal_cdf(1.96) == pytest.approx(0.975002104851779566, abs=1e-12)
    assert laclab.fukuyama_constant(2) == pytest.approx(math.sqrt(42) / 9, abs=1e-12)
    assert laclab.erdos_fortet_cdf(0.7) == pytest.approx(0.804077533502482916, abs=1e-8)


def test_cli_in_process():
    assert "clt" in laclab.command_names()
    out = laclab.run_json("gamma", "--a", 2, "--s", 0.5, "--t", 0.5)
    assert out["results"]["value"] == pytest.approx(0.25, abs=1e-12)
    code, _, err = laclab.run("gen", "--n", "0")
    assert code == 1 and err
