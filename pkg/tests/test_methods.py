import numpy as np
import pytest

from core.data_manager import two_sample
from core.errors import InvalidParameterError, UnknownMethodError
from core.methods import (
    STUDY_ROSTER, EXTRA_METHODS, list_methods, method_family, parse_method, split_descriptor,
    PairwiseMethod, LogRankMethod, SchumacherMethod,
)
from core.statistics import StatisticForm


class TestSplitDescriptor:

    def test_name_only(self):
        assert split_descriptor("logrank") == ("logrank", {})

    def test_parameters(self):
        assert split_descriptor(" Gaussian:Sigma=2 ") == ("gaussian", {"sigma": "2"})

    @pytest.mark.parametrize("text", ["", "   "])
    def test_empty(self, text):
        with pytest.raises(UnknownMethodError):
            split_descriptor(text)

    def test_malformed_pair(self):
        with pytest.raises(InvalidParameterError):
            split_descriptor("energy:alpha")


class TestParseMethod:

    def test_roster_round_trip(self):
        """Every listed descriptor parses back to itself."""
        for descriptor in list_methods():
            assert parse_method(descriptor).descriptor == descriptor

    def test_roster_size(self):
        assert len(STUDY_ROSTER) == 14
        assert set(STUDY_ROSTER).isdisjoint(EXTRA_METHODS)

    def test_canonical_formatting(self):
        assert parse_method("energy:alpha=1.0").descriptor == "energy:alpha=1"
        assert parse_method("energy").descriptor == "energy:alpha=1"
        assert parse_method("fleming-harrington").descriptor == "fleming-harrington:rho=1,gamma=1"

    def test_form_and_weights_options(self):
        method = parse_method("energy:alpha=1,form=vn,weights=uniform")
        assert isinstance(method, PairwiseMethod)
        assert method.kind.form is StatisticForm.V_NORMALIZED
        assert method.kind.censoring_aware is False
        assert method.descriptor == "energy:alpha=1,form=vn,weights=uniform"
        assert parse_method("gaussian:sigma=1,form=u").descriptor == "gaussian:sigma=1"

    def test_bad_form(self):
        with pytest.raises(InvalidParameterError, match="form"):
            parse_method("energy:form=w")

    def test_families(self):
        assert method_family("energy:alpha=0.4") == "energy"
        assert method_family("ratquad:c=2,beta=2") == "kernel"
        assert method_family("gehan") == "logrank"
        assert method_family("cvm-censored:form=bridge") == "schumacher"

    def test_types(self):
        assert isinstance(parse_method("peto-peto"), LogRankMethod)
        bridge = parse_method("ks-censored:form=bridge")
        assert isinstance(bridge, SchumacherMethod) and bridge.bridge

    def test_unknown(self):
        with pytest.raises(UnknownMethodError):
            parse_method("wilcoxon")

    @pytest.mark.parametrize("text", ["logrank:rho=1", "gaussian:sigma=0", "energy:alpha=3",
                                      "fleming-harrington:delta=1", "ks-censored:alpha=1"])
    def test_invalid_parameters(self, text):
        with pytest.raises(InvalidParameterError):
            parse_method(text)


class TestCompute:

    def test_logrank_value_and_asymptotic(self):
        data = two_sample([1.0, 2.0], [1, 1], [3.0, 4.0], [1, 1])
        method = parse_method("logrank")
        z2 = method.compute(data)
        assert z2 == pytest.approx(49 / 17)
        assert 0.0 < method.asymptotic_pvalue(z2) < 1.0

    def test_pairwise_has_no_asymptotic(self):
        assert parse_method("energy:alpha=1").asymptotic_pvalue(1.0) is None

    def test_schumacher_bridge_switch(self):
        data = two_sample([1.0, 2.0, 3.0], [1, 1, 1], [1.5, 2.5, 3.5], [1, 1, 1])
        assert parse_method("ks-censored").compute(data) == pytest.approx(6 ** 0.5)
        assert parse_method("ks-censored:form=bridge").compute(data) == pytest.approx(4 / 3)

    def test_rowwise_evaluator_marks_degenerate(self):
        """The row-by-row fallback maps degenerate splits to -inf."""
        method = parse_method("ks-censored")
        evaluator = method.bind(np.array([1.0, 2.0, 3.0]), np.array([0, 1, 1]))
        values = evaluator(np.array([[1, 0, 0], [0, 1, 0]]))
        assert values[0] == -np.inf
        assert np.isfinite(values[1])
