"""
Tests for input validation, censoring-aware ordering and CSV ingestion.
"""
import numpy as np
import pandas as pd
import pytest

from core.data_manager import (
    validate, order_with_censoring, two_sample, frame_to_two_sample,
    load_two_sample_csv, two_sample_to_frame,
)
from core.errors import (
    EmptySampleError, LengthMismatchError, NegativeTimeError, NonBinaryEventError,
    NonFiniteTimeError, SchemaError, SurvivalDataError,
)
from core.models import TwoSampleData, SurvivalSample


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

class TestValidate:

    def test_accepts_plain_lists(self):
        """Numbers and 0/1 flags become float64 times and int8 events."""
        s = validate([1, 2.5, 3], [1, 0, 1])
        assert s.times.dtype == np.float64
        assert s.events.dtype == np.int8
        assert s.n == 3
        assert s.n_events == 2

    def test_accepts_booleans(self):
        """True/False are valid event flags."""
        s = validate([1.0, 2.0], [True, False])
        assert s.events.tolist() == [1, 0]

    def test_zero_time_allowed(self):
        """Time 0 is a valid observation."""
        assert validate([0.0], [1]).times[0] == 0.0

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            validate([], [])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            validate([1.0, 2.0], [1])

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite(self, bad):
        with pytest.raises(NonFiniteTimeError):
            validate([1.0, bad], [1, 1])

    def test_negative(self):
        with pytest.raises(NegativeTimeError):
            validate([1.0, -0.5], [1, 1])

    @pytest.mark.parametrize("flag", [2, -1, 0.5])
    def test_non_binary(self, flag):
        with pytest.raises(NonBinaryEventError):
            validate([1.0, 2.0], [1, flag])

    def test_errors_are_value_errors(self):
        """Every validation failure is catchable as ValueError."""
        with pytest.raises(ValueError):
            validate([-1.0], [1])
        assert issubclass(SchemaError, SurvivalDataError)

    def test_arrays_are_read_only(self):
        s = validate([1.0, 2.0], [1, 0])
        with pytest.raises(ValueError):
            s.times[0] = 5.0


# ---------------------------------------------------------------------------
# order_with_censoring
# ---------------------------------------------------------------------------

class TestOrderWithCensoring:

    def test_events_before_censorings_at_ties(self):
        """At equal times the event sorts ahead of the censoring."""
        s = validate([2.0, 1.0, 2.0, 3.0], [0, 1, 1, 0])
        o = order_with_censoring(s)
        assert o.sorted_times.tolist() == [1.0, 2.0, 2.0, 3.0]
        assert o.sorted_events.tolist() == [1, 1, 0, 0]
        assert o.original_indices.tolist() == [1, 2, 0, 3]

    def test_stable_for_equal_pairs(self):
        """Identical (time, event) pairs keep their input order."""
        s = validate([1.0, 1.0, 1.0], [1, 1, 1])
        assert order_with_censoring(s).original_indices.tolist() == [0, 1, 2]

    def test_restore_round_trip(self):
        """restore() gives back the original sample."""
        rng = np.random.default_rng(3)
        s = validate(rng.integers(0, 5, 20).astype(float), rng.integers(0, 2, 20))
        back = order_with_censoring(s).restore()
        np.testing.assert_array_equal(back.times, s.times)
        np.testing.assert_array_equal(back.events, s.events)


# ---------------------------------------------------------------------------
# TwoSampleData
# ---------------------------------------------------------------------------

class TestTwoSample:

    def test_sizes(self):
        data = two_sample([1, 2], [1, 1], [3, 4, 5], [1, 0, 1])
        assert (data.n0, data.n1, data.n) == (2, 3, 5)

    def test_swapped(self):
        data = two_sample([1, 2], [1, 1], [3, 4, 5], [1, 0, 1])
        swapped = data.swapped()
        assert swapped.n0 == 3
        np.testing.assert_array_equal(swapped.group1.times, [1.0, 2.0])

    def test_pooled_and_back(self):
        """pooled() labels group 0 with 0; from_pooled inverts it."""
        data = two_sample([1, 2], [1, 0], [3], [1])
        times, events, labels = data.pooled()
        assert labels.tolist() == [0, 0, 1]
        again = TwoSampleData.from_pooled(times, events, labels)
        np.testing.assert_array_equal(again.group0.events, [1, 0])

    def test_empty_group_rejected(self):
        with pytest.raises(EmptySampleError):
            TwoSampleData.from_pooled(np.array([1.0, 2.0]), np.array([1, 1]), np.array([0, 0]))


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

class TestCsv:

    def test_load(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("time,event,group\n1,1,0\n2,0,0\n3,1,1\n4,1,1\n")
        data = load_two_sample_csv(path)
        assert data.n0 == 2 and data.n1 == 2
        assert data.group0.events.tolist() == [1, 0]

    def test_header_case_and_spaces(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Time, Event, Group\n1, 1, 0\n3, 1, 1\n")
        assert load_two_sample_csv(path).n == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_two_sample_csv(tmp_path / "nope.csv")

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "latin.csv"
        path.write_bytes(b"time,event,group\n1,1,0\n\xff\xfe,1,1\n")
        with pytest.raises(SchemaError, match="UTF-8"):
            load_two_sample_csv(path)

    def test_directory(self, tmp_path):
        with pytest.raises(SchemaError, match="could not read"):
            load_two_sample_csv(tmp_path)

    def test_missing_column(self):
        with pytest.raises(SchemaError, match="group"):
            frame_to_two_sample(pd.DataFrame({"time": [1.0], "event": [1]}))

    def test_non_numeric_time(self):
        frame = pd.DataFrame({"time": ["1", "x"], "event": [1, 1], "group": [0, 1]})
        with pytest.raises(SchemaError, match="row 2"):
            frame_to_two_sample(frame)

    def test_group_not_binary(self):
        frame = pd.DataFrame({"time": [1.0, 2.0], "event": [1, 1], "group": [0, 2]})
        with pytest.raises(SchemaError):
            frame_to_two_sample(frame)

    def test_single_group(self):
        frame = pd.DataFrame({"time": [1.0, 2.0], "event": [1, 1], "group": [1, 1]})
        with pytest.raises(SchemaError, match="group 0"):
            frame_to_two_sample(frame)

    def test_negative_time_in_csv(self):
        frame = pd.DataFrame({"time": [1.0, -2.0], "event": [1, 1], "group": [0, 1]})
        with pytest.raises(NegativeTimeError):
            frame_to_two_sample(frame)

    def test_frame_round_trip(self):
        data = two_sample([1, 2], [1, 0], [3], [1])
        again = frame_to_two_sample(two_sample_to_frame(data))
        np.testing.assert_array_equal(again.group0.times, data.group0.times)
        np.testing.assert_array_equal(again.group1.events, data.group1.events)


class TestSurvivalSample:

    def test_to_dict(self):
        s = SurvivalSample(np.array([1.0, 2.0]), np.array([1, 0]))
        assert s.to_dict() == {"times": [1.0, 2.0], "events": [1, 0]}
