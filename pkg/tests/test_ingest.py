"""
Tests for raw event parsing and cleaning
"""

from datetime import datetime

import pytest

from stochcap.error_handler import InputError, SchemaError
from stochcap.ingest import EventFormat, filter_events, parse_events, pce_of
from stochcap.models import FilterConfig, VehicleRecord


HEADER = "timestamp,lane,speed_kmh,length_m,valid\n"


def record(second=0, lane=1, speed=90.0, length=4.5, valid=True):
    return VehicleRecord(datetime(2024, 1, 1, 7, 0, second), lane, speed, length, valid)


class TestParseEvents:
    """CSV parsing"""

    def test_parses_valid_rows(self):
        data = HEADER + "2024-01-01T07:00:01,1,92.5,4.2,1\n2024-01-01T07:00:03,2,88.0,12.0,1\n"
        result = parse_events(data.encode())
        assert len(result.records) == 2
        assert result.malformed == 0
        assert result.records[1].lane == 2
        assert result.records[1].length == 12.0

    def test_counts_malformed_rows_with_line_numbers(self):
        """Bad rows are counted and reported, good rows survive"""
        data = (
            HEADER
            + "2024-01-01T07:00:01,1,92.5,4.2,1\n"
            + "not-a-time,1,92.5,4.2,1\n"
            + "2024-01-01T07:00:02,1,fast,4.2,1\n"
            + "2024-01-01T07:00:03,1,90,4.2,2\n"
            + "2024-01-01T07:00:04,1.5,90,4.2,1\n"
            + "2024-01-01T07:00:05,1,-3,4.2,1\n"
            + "2024-01-01T07:00:06,1,90,4.2,1\n"
        )
        result = parse_events(data.encode())
        assert len(result.records) == 2
        assert result.malformed == 5
        assert result.malformed_lines == [3, 4, 5, 6, 7]

    def test_non_finite_numbers_malformed(self):
        """Infinite lane, speed or length is a malformed row, not a crash"""
        data = (
            HEADER
            + "2024-01-01T07:00:01,inf,92.5,4.2,1\n"
            + "2024-01-01T07:00:02,1,-inf,4.2,0\n"
            + "2024-01-01T07:00:03,1,90,inf,1\n"
            + "2024-01-01T07:00:04,1,90,4.2,1\n"
        )
        result = parse_events(data.encode())
        assert result.malformed == 3
        assert result.malformed_lines == [2, 3, 4]
        assert len(result.records) == 1

    def test_invalid_flag_row_keeps_zero_speed(self):
        """Records flagged invalid are parsed and left for the filter"""
        data = HEADER + "2024-01-01T07:00:01,1,0,0,0\n"
        result = parse_events(data.encode())
        assert result.malformed == 0
        assert result.records[0].valid is False

    def test_missing_column(self):
        data = "timestamp,lane,speed_kmh,valid\n2024-01-01T07:00:01,1,90,1\n"
        with pytest.raises(SchemaError) as exc:
            parse_events(data.encode())
        assert exc.value.column == "length_m"

    def test_empty_stream(self):
        with pytest.raises(SchemaError):
            parse_events(b"")

    def test_header_only(self):
        result = parse_events(HEADER.encode())
        assert result.records == []

    def test_bad_encoding(self):
        with pytest.raises(InputError):
            parse_events(HEADER.encode() + b"\xff\xfe,1,90,4,1\n")

    def test_custom_format(self):
        """Column names and delimiter come from EventFormat"""
        fmt = EventFormat(timestamp="time", lane="l", speed="v", length="len", valid="ok", delimiter=";")
        data = "time;l;v;len;ok\n2024-01-01T07:00:01;1;92.5;4.2;1\n"
        result = parse_events(data.encode(), fmt)
        assert len(result.records) == 1


class TestFilterEvents:
    """Record cleaning"""

    def test_one_reason_per_rejection(self):
        records = [
            record(1, valid=False),
            record(2, speed=0.0),
            record(3, speed=300.0),
            record(4, length=45.0),
            record(5),
            record(5),
        ]
        kept, summary = filter_events(records)
        assert len(kept) == 1
        assert summary.invalid == 1
        assert summary.non_positive == 1
        assert summary.implausible_speed == 1
        assert summary.implausible_length == 1
        assert summary.duplicate == 1
        assert summary.kept + summary.rejected == summary.total

    def test_idempotent(self):
        """Filtering the kept records again rejects nothing"""
        records = [record(3), record(1, speed=300.0), record(2), record(2), record(4, valid=False)]
        kept, _ = filter_events(records)
        again, summary = filter_events(kept)
        assert again == kept
        assert summary.rejected == 0
        assert summary.kept == summary.total == len(kept)

    def test_output_sorted(self):
        kept, _ = filter_events([record(9), record(1), record(5)])
        assert [r.timestamp.second for r in kept] == [1, 5, 9]

    def test_same_time_other_lane_is_not_duplicate(self):
        kept, summary = filter_events([record(1, lane=1), record(1, lane=2)])
        assert len(kept) == 2
        assert summary.duplicate == 0

    def test_custom_caps(self):
        kept, summary = filter_events([record(1, speed=140.0)], FilterConfig(max_speed_kmh=130))
        assert kept == []
        assert summary.implausible_speed == 1

    def test_empty_input(self):
        kept, summary = filter_events([])
        assert kept == [] and summary.total == 0


class TestPce:
    """Passenger car equivalents"""

    @pytest.mark.parametrize("length,expected", [(4.5, 1), (9.0, 1), (9.01, 2), (18.0, 2)])
    def test_heavy_vehicle_threshold(self, length, expected):
        """Strictly longer than 9 m counts double"""
        assert pce_of(record(length=length)) == expected
