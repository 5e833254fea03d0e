import math

import numpy as np
import pytest

from covertpath.adversary import (
    CopyScheme,
    OneTimePadScheme,
    PaddedOneTimePadScheme,
    audit,
    copy_scheme_example,
    deniability_report,
    hidability_report,
    induced_marginal,
    mutual_information_leakage,
    padded_scheme_example,
    secrecy_bound,
)
from covertpath.codec import build_codebook
from covertpath.errors import ParameterError
from covertpath.model import (
    CodewordMatrix,
    ScalarDistribution,
    SubsetFamily,
    binary_entropy,
    total_variation,
)
from covertpath.typicality import TypicalSet


@pytest.fixture
def binned_codebook(fig2_optimizer, fig2_family):
    return build_codebook(
        fig2_optimizer, 10, 0.45, "deniable", fig2_family, seed=3,
        num_bins=20, num_message_bins=2,
    )


class TestInducedMarginal:
    def test_total_mass_one(self, binned_codebook):
        for subset in ((1,), (2,)):
            _keys, mass = induced_marginal(binned_codebook, subset)
            assert float(mass.sum()) == pytest.approx(1.0, abs=1e-12)

    def test_one_time_pad_is_uniform_per_link(self):
        otp = OneTimePadScheme(6)
        for subset in ((1,), (2,)):
            keys, mass = induced_marginal(otp, subset)
            assert keys.shape[0] == 64
            assert np.allclose(mass, 1 / 64)

    def test_copy_scheme_diagonal_support(self):
        copy = CopyScheme(3, 5)
        keys, mass = induced_marginal(copy, (1, 2))
        # observed pairs are 00 or 11 at every position: 2^5 diagonal keys
        assert keys.shape[0] == 32
        assert np.allclose(mass, 1 / 32)
        for key in keys:
            syms = [(int(key) >> (2 * (4 - t))) & 3 for t in range(5)]
            assert all(s in (0, 3) for s in syms)

    def test_matches_brute_force_on_codebook(self, binned_codebook):
        # oracle: enumerate the codebook explicitly and accumulate
        cb = binned_codebook
        probs = cb.sequence_probs(cb.p_active)
        bins = cb.bin_assignments()
        keys, cond = cb.message_observation_mass((2,))
        key_order = {int(k): j for j, k in enumerate(keys)}
        m_count = cb.num_messages
        brute = np.zeros((m_count, keys.shape[0]))
        from covertpath.model import project_codeword

        for k, x in enumerate(cb.typical.sequences()):
            if bins[k] >= m_count:
                continue
            obs = project_codeword(x, (2,)).symbols
            code = 0
            for s in obs:
                code = (code << 1) | s
            brute[bins[k], key_order[code]] += probs[k]
        brute /= brute.sum(axis=1, keepdims=True)
        assert np.allclose(brute, cond, atol=1e-12)


class TestDeniabilityReport:
    def test_perfect_match_gives_zero(self):
        # copy scheme under its natural innocent: exact zero TV
        fam = SubsetFamily(((1, 2), (1, 3), (2, 3)), 3)
        rep = copy_scheme_example(3, 8, fam)
        assert all(tv < 1e-12 for tv in rep.tv_per_subset)

    def test_one_time_pad_not_deniable(self, fig2_innocent):
        fam = SubsetFamily(((1,), (2,)), 2)
        tvs, worst_subset, worst = deniability_report(
            OneTimePadScheme(8), fig2_innocent, fam
        )
        # top link innocent marginal is already uniform: exactly zero
        assert tvs[0] == pytest.approx(0.0, abs=1e-12)
        # bottom link: TV = 1 - sum min(Bern(3/4)^n, uniform) > 0.2
        assert worst_subset == (2,)
        assert worst > 0.2

    def test_one_time_pad_tv_value_exact(self, fig2_innocent):
        # independent computation of TV(uniform, Bern(3/4)-product) at n=8
        n = 8
        total = 0.0
        for k in range(n + 1):
            q = (0.75 ** k) * (0.25 ** (n - k))
            total += math.comb(n, k) * min(q, 2.0 ** -n)
        expected = 1.0 - total
        fam = SubsetFamily(((2,),), 2)
        tvs, _, _ = deniability_report(OneTimePadScheme(n), fig2_innocent, fam)
        assert tvs[0] == pytest.approx(expected, abs=1e-12)

    def test_grows_toward_one_with_n(self, fig2_innocent):
        fam = SubsetFamily(((2,),), 2)
        vals = [
            deniability_report(OneTimePadScheme(n), fig2_innocent, fam)[2]
            for n in (4, 8, 12)
        ]
        assert vals[0] < vals[1] < vals[2]


class TestHidabilityReport:
    def test_one_time_pad_ratio_exactly_one(self):
        fam = SubsetFamily(((1,), (2,)), 2)
        ranges, overall = hidability_report(OneTimePadScheme(6), fam)
        assert overall == (1.0, 1.0)

    def test_copy_scheme_ratio_two_to_n(self):
        fam = SubsetFamily(((1, 2),), 3)
        n = 7
        _ranges, overall = hidability_report(CopyScheme(3, n), fam)
        assert overall[1] == pytest.approx(2.0 ** n)
        assert overall[0] == 0.0

    def test_single_message_ratio_one(self, fig2_optimizer, fig2_family):
        cb = build_codebook(fig2_optimizer, 8, 0.45, "deniable",
                            fig2_family, seed=1)
        assert cb.num_messages == 1
        _ranges, overall = hidability_report(cb, fig2_family)
        assert overall == (1.0, 1.0)

    def test_posterior_consistency(self, binned_codebook):
        # sum over messages of Pr(m | x_W) = 1 for every positive-mass key
        keys, cond = binned_codebook.message_observation_mass((1,))
        induced = cond.mean(axis=0)
        posterior = cond / (binned_codebook.num_messages * induced[None, :])
        assert np.allclose(posterior.sum(axis=0), 1.0, atol=1e-12)

    def test_mass_floor_restricts_observations(self):
        pps = PaddedOneTimePadScheme(5, 2)
        fam = SubsetFamily(((1,),), 2)
        _r, overall_all = hidability_report(pps, fam, mass_floor=0.0)
        assert overall_all[1] == pytest.approx(2.0 ** 5)


class TestLeakage:
    def test_one_time_pad_zero(self):
        assert mutual_information_leakage(OneTimePadScheme(6), (1,)) == 0.0

    def test_copy_scheme_full_message(self):
        n = 6
        assert mutual_information_leakage(
            CopyScheme(3, n), (1, 2)
        ) == pytest.approx(float(n), abs=1e-12)

    def test_data_processing_on_nested_subsets(self, fig2_optimizer):
        probs = np.kron(fig2_optimizer.probs, [0.5, 0.5])
        p3 = ScalarDistribution(probs)
        cb = build_codebook(p3, 6, 1.2, "deniable",
                            SubsetFamily(((1,), (2,)), 3), seed=5,
                            num_bins=12, num_message_bins=2)
        small = mutual_information_leakage(cb, (1,))
        large = mutual_information_leakage(cb, (1, 2))
        assert small <= large + 1e-12

    def test_leakage_bounds(self, binned_codebook):
        for subset in ((1,), (2,)):
            leak = mutual_information_leakage(binned_codebook, subset)
            assert 0.0 <= leak <= math.log2(binned_codebook.num_messages) + 1e-12
            assert leak <= binned_codebook.n * len(subset)


class TestSecrecyBoundTheorem:
    def test_bound_formula(self):
        assert secrecy_bound(0.0, 10.0) == 0.0
        assert secrecy_bound(1.0, 10.0) == pytest.approx(10.0)

    def test_holds_for_all_audited_schemes(self, fig2_innocent,
                                           binned_codebook, fig2_family):
        fam3 = SubsetFamily(((1, 2), (1, 3), (2, 3)), 3)
        reports = [
            audit(binned_codebook, fig2_innocent, fig2_family),
            audit(OneTimePadScheme(6), fig2_innocent, fig2_family),
            copy_scheme_example(3, 6, fam3),
        ]
        for rep in reports:
            assert rep.secrecy_bound_holds
            assert rep.leakage_max <= rep.secrecy_bound + 1e-9


class TestPaddedScheme:
    def test_closed_form_small_case(self):
        # n=4, |D|=2: H2(1/8) + (1/8)*log2(2)
        out = padded_scheme_example(4, 0.25)
        expected = binary_entropy(1 / 8) + (1 / 8) * 1.0
        assert out["leakage_exact"] == pytest.approx(expected, abs=1e-12)
        assert out["leakage_exact"] == pytest.approx(0.668564, abs=1e-6)
        assert out["max_ratio"] == 16.0

    def test_exact_matches_formula_across_sizes(self):
        for n in range(2, 13):
            for d in (1, 2, 4):
                if d >= (1 << n):
                    continue
                delta = math.log2(d) / n
                out = padded_scheme_example(n, delta)
                assert out["special_size"] == d
                assert out["leakage_exact"] == pytest.approx(
                    out["leakage_formula"], abs=1e-9
                )

    def test_dense_enumeration_cross_check(self):
        # fully independent: audit the scheme object and compare
        for n, d in ((4, 2), (6, 4), (8, 2)):
            delta = math.log2(d) / n
            out = padded_scheme_example(n, delta)
            scheme = PaddedOneTimePadScheme(n, d)
            dense = mutual_information_leakage(scheme, (1,))
            assert dense == pytest.approx(out["leakage_exact"], abs=1e-10)
            _r, overall = hidability_report(
                scheme, SubsetFamily(((1,),), 2)
            )
            assert overall[1] == pytest.approx(out["max_ratio"])

    def test_rounding_recorded(self):
        out = padded_scheme_example(6, 0.18)  # 2^1.08 = 2.11 -> d = 2
        assert out["special_size"] == 2
        assert out["delta_effective"] == pytest.approx(1 / 6)

    def test_invalid_parameters(self):
        with pytest.raises(ParameterError):
            padded_scheme_example(4, 1.0)  # d = 2^n out of range
        with pytest.raises(ParameterError):
            PaddedOneTimePadScheme(4, 0)

    def test_leakage_vanishes_with_n(self):
        vals = [
            padded_scheme_example(n, math.log2(2) / n)["leakage_exact"]
            for n in (4, 8, 12)
        ]
        assert vals[0] > vals[1] > vals[2]
        assert vals[-1] < 0.02


class TestReferenceEncoders:
    def test_one_time_pad_roundtrip(self):
        otp = OneTimePadScheme(6)
        rng = np.random.default_rng(2)
        for m in (0, 13, 63):
            x = otp.encode(m, rng)
            assert otp.decode(x).message == m

    def test_copy_roundtrip_and_innocent(self):
        copy = CopyScheme(3, 5)
        x = copy.encode(19)
        assert copy.decode(x).message == 19
        mixed = CodewordMatrix(3, (0, 7, 3, 0, 7))
        assert not copy.decode(mixed).active

    def test_padded_roundtrip(self):
        pps = PaddedOneTimePadScheme(6, 4)
        rng = np.random.default_rng(3)
        for m in (0, 3, 17, 63):
            x = pps.encode(m, rng)
            assert pps.decode(x).message == m


class TestAuditReport:
    def test_serializable(self, binned_codebook, fig2_innocent, fig2_family):
        import json

        rep = audit(binned_codebook, fig2_innocent, fig2_family)
        payload = json.dumps(rep.to_dict())
        assert "worst_tv" in payload

    def test_single_bin_tv_matches_materialized_path(
        self, fig2_optimizer, fig2_innocent, fig2_family
    ):
        # the observed-type fast path must agree with the generic sweep
        from covertpath.adversary import _single_bin_tv, _subset_tv

        cb = build_codebook(fig2_optimizer, 8, 0.45, "deniable",
                            fig2_family, seed=1)
        assert cb.rate.num_bins == 1
        for subset in ((1,), (2,)):
            fast = _single_bin_tv(cb, fig2_innocent, subset)
            keys, mass = induced_marginal(cb, subset)
            from covertpath.adversary import innocent_sequence_probs

            q = innocent_sequence_probs(fig2_innocent, subset, keys, cb.n)
            slow = 0.5 * float(np.abs(mass - q).sum()) + 0.5 * max(
                0.0, 1.0 - float(q.sum())
            )
            assert fast == pytest.approx(slow, abs=1e-12)
