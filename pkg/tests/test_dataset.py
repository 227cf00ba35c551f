import io

import numpy as np
import pytest

from eduvuln import dataset
from eduvuln.errors import ConfigError, DataError, SchemaError

from conftest import planted_config

STUDENTS_CSV = """code,year,reading,citizenship,english,writing,quant,global,internet,computer,ethnic,public_school
101,2018,50,50,50,50,50,,1,0,0,1
101,2018,,,,,,300,0,1,1,1
202,2018,40,40,40,40,40,200,1,1,0,0
"""


def parse(text, **kw):
    return dataset.parse_students(io.StringIO(text), **kw)


class TestParseStudents:
    def test_subject_sum_derives_global(self):
        records, errors = parse(STUDENTS_CSV)
        assert not errors
        assert records[0].global_score is None
        assert records[0].effective_global_score() == 250.0

    def test_global_out_of_range_rejected(self):
        text = STUDENTS_CSV + "303,2018,,,,,,501,0,0,0,0\n"
        records, errors = parse(text)
        assert len(records) == 3
        assert len(errors) == 1
        assert "out of range" in errors[0] and "line 5" in errors[0]

    def test_three_row_fixture_verbatim(self):
        records, _ = parse(STUDENTS_CSV)
        assert len(records) == 3
        r = records[2]
        assert (r.municipality_code, r.year) == (202, 2018)
        assert r.subject_scores == (40.0, 40.0, 40.0, 40.0, 40.0)
        assert r.global_score == 200.0
        assert (r.has_internet, r.has_computer, r.is_ethnic, r.school_public) == \
            (True, True, False, False)

    def test_missing_column_names_it(self):
        bad = STUDENTS_CSV.replace("quant,", "")
        with pytest.raises(SchemaError, match="quant"):
            parse(bad)

    def test_inconsistent_score_forms_rejected(self):
        text = STUDENTS_CSV + "303,2018,50,50,50,50,50,300,0,0,0,0\n"
        _, errors = parse(text)
        assert len(errors) == 1 and "inconsistent" in errors[0]

    def test_consistent_within_half_point_kept(self):
        text = STUDENTS_CSV + "303,2018,50,50,50,50,50,250.4,0,0,0,0\n"
        records, errors = parse(text)
        assert not errors and len(records) == 4

    def test_partial_subjects_rejected(self):
        text = STUDENTS_CSV + "303,2018,50,50,,50,50,,0,0,0,0\n"
        _, errors = parse(text)
        assert len(errors) == 1 and "incomplete" in errors[0]

    def test_no_scores_rejected(self):
        text = STUDENTS_CSV + "303,2018,,,,,,,0,0,0,0\n"
        _, errors = parse(text)
        assert len(errors) == 1

    def test_bad_boolean_rejected(self):
        text = STUDENTS_CSV + "303,2018,,,,,,300,yes,0,0,0\n"
        _, errors = parse(text)
        assert len(errors) == 1 and "internet" in errors[0]

    def test_strict_raises_on_first_bad_row(self):
        text = STUDENTS_CSV + "303,2018,,,,,,501,0,0,0,0\n"
        with pytest.raises(DataError, match="line 5"):
            parse(text, strict=True)

    def test_crlf_accepted(self):
        records, errors = parse(STUDENTS_CSV.replace("\n", "\r\n"))
        assert len(records) == 3 and not errors


def make_inputs():
    students = [
        # municipality 1, year 2018: two students
        dataset.StudentRecord(1, 2018, None, 200.0, True, False, False, True),
        dataset.StudentRecord(1, 2018, None, 300.0, False, True, True, True),
        # municipality 2, year 2018: four students
        dataset.StudentRecord(2, 2018, None, 100.0, True, True, False, False),
        dataset.StudentRecord(2, 2018, None, 150.0, True, False, False, False),
        dataset.StudentRecord(2, 2018, None, 250.0, False, False, True, True),
        dataset.StudentRecord(2, 2018, None, 400.0, True, False, False, False),
    ]
    connectivity = [dataset.ConnectivityRecord(1, 2018, 150),
                    dataset.ConnectivityRecord(2, 2018, 40)]
    census = [dataset.CensusRecord(1, 2018, 5, 10_000, 4_000),
              dataset.CensusRecord(2, 2018, 5, 2_000, 1_500)]
    return students, connectivity, census


class TestAggregate:
    def test_proportions_and_connectivity(self):
        students, connectivity, census = make_inputs()
        rows = dataset.aggregate(students, connectivity, census).rows
        one = next(r for r in rows if r.code == 1)
        assert one.internet_pct == 50.0
        assert one.connectivity == 15.0  # 1000 * 150 / 10000

    def test_hand_computed_means(self):
        students, connectivity, census = make_inputs()
        rows = dataset.aggregate(students, connectivity, census).rows
        assert len(rows) == 2
        one = next(r for r in rows if r.code == 1)
        two = next(r for r in rows if r.code == 2)
        assert one.global_score_mean == pytest.approx(250.0, abs=1e-12)
        assert one.computer_pct == 50.0 and one.ethnic_pct == 50.0
        assert one.school_public_pct == 100.0
        assert one.rural_index == pytest.approx(40.0)
        assert two.global_score_mean == pytest.approx(225.0, abs=1e-12)
        assert two.internet_pct == 75.0 and two.computer_pct == 25.0
        assert two.connectivity == pytest.approx(20.0)
        assert two.rural_index == pytest.approx(75.0)
        assert two.n_students == 4

    def test_permutation_invariant(self):
        students, connectivity, census = make_inputs()
        a = dataset.aggregate(students, connectivity, census).rows
        b = dataset.aggregate(students[::-1], connectivity[::-1], census[::-1]).rows
        assert a == b

    def test_missing_connectivity_warns_and_zeroes(self):
        students, _, census = make_inputs()
        result = dataset.aggregate(students, [dataset.ConnectivityRecord(1, 2018, 150)],
                                   census)
        two = next(r for r in result.rows if r.code == 2)
        assert two.connectivity == 0.0
        assert any("code=2" in w for w in result.warnings)

    def test_missing_census_is_fatal(self):
        students, connectivity, census = make_inputs()
        with pytest.raises(DataError, match="census"):
            dataset.aggregate(students, connectivity, census[:1])

    def test_nearest_census_year_prefers_earlier_on_tie(self):
        students = [dataset.StudentRecord(1, 2018, None, 200.0, False, False, False, False)]
        census = [dataset.CensusRecord(1, 2017, 5, 1_000, 0),
                  dataset.CensusRecord(1, 2019, 5, 3_000, 0)]
        rows = dataset.aggregate(students, [], census).rows
        assert rows[0].population == 1_000

    def test_percentages_in_range_always(self):
        students, connectivity, census = make_inputs()
        for r in dataset.aggregate(students, connectivity, census).rows:
            for v in (r.internet_pct, r.computer_pct, r.ethnic_pct,
                      r.school_public_pct, r.rural_index):
                assert 0.0 <= v <= 100.0
            assert r.connectivity >= 0.0


class TestSplitByYear:
    def test_validation_year_isolated(self, planted_rows):
        train, val = dataset.split_by_year(planted_rows, range(2014, 2019), 2019)
        assert {r.year for r in val} == {2019}
        assert {r.year for r in train} == set(range(2014, 2019))

    def test_overlap_is_config_error(self, planted_rows):
        with pytest.raises(ConfigError, match="overlap"):
            dataset.split_by_year(planted_rows, [2014], 2014)

    def test_empty_partition_is_config_error(self, planted_rows):
        with pytest.raises(ConfigError, match="empty"):
            dataset.split_by_year(planted_rows, [2011], 2012)

    def test_sizes_sum_over_selected_years(self, planted_rows):
        train, val = dataset.split_by_year(planted_rows, [2015, 2017], 2019)
        expected = sum(1 for r in planted_rows if r.year in (2015, 2017, 2019))
        assert len(train) + len(val) == expected


class TestCsvRoundTrip:
    def test_exact_round_trip(self, planted_rows):
        buf = io.StringIO()
        dataset.write_aggregated_csv(planted_rows, buf)
        back = dataset.read_aggregated_csv(io.StringIO(buf.getvalue()))
        assert back == list(planted_rows)

    def test_header(self):
        buf = io.StringIO()
        dataset.write_aggregated_csv([], buf)
        assert buf.getvalue().strip() == ",".join(dataset.AGGREGATED_HEADER)


class TestGenerateSynthetic:
    def test_same_seed_bit_identical(self):
        cfg = planted_config(n_municipalities=40)
        assert dataset.generate_synthetic(cfg, 9) == dataset.generate_synthetic(cfg, 9)

    def test_different_seed_differs(self):
        cfg = planted_config(n_municipalities=40)
        assert dataset.generate_synthetic(cfg, 9) != dataset.generate_synthetic(cfg, 10)

    def test_zero_noise_is_exact_linear_form(self):
        cfg = planted_config(n_municipalities=40, noise_scale=0.0)
        for r in dataset.generate_synthetic(cfg, 3):
            expected = (cfg.base_score + cfg.effect_internet * r.internet_pct
                        + cfg.effect_connectivity * r.connectivity)
            assert r.global_score_mean == pytest.approx(min(500.0, max(0.0, expected)),
                                                        abs=1e-9)

    def test_planted_positive_effect_yields_positive_correlation(self):
        cfg = planted_config(n_municipalities=500, years=(2018,))
        rows = dataset.generate_synthetic(cfg, 5)
        internet = np.array([r.internet_pct for r in rows])
        score = np.array([r.global_score_mean for r in rows])
        assert np.corrcoef(internet, score)[0, 1] > 0.0

    def test_invariants_hold(self):
        cfg = planted_config(n_municipalities=60, base_score=20.0,
                             effect_internet=-3.0, noise_scale=400.0)
        for r in dataset.generate_synthetic(cfg, 11):
            assert 0.0 <= r.global_score_mean <= 500.0
            assert r.population > 0 and r.n_students >= 1

    def test_bad_counts_rejected(self):
        with pytest.raises(ConfigError):
            dataset.SynthConfig(n_municipalities=0, years=(2018,))
        with pytest.raises(ConfigError):
            dataset.SynthConfig(n_municipalities=5, years=())


class TestSourceTables:
    def test_disaggregate_then_aggregate_recovers_planted(self):
        cfg = planted_config(n_municipalities=25, years=(2018, 2019))
        rows = dataset.generate_synthetic(cfg, 21)
        students, connectivity, census = dataset.synth_source_tables(rows, 22)
        back = dataset.aggregate(students, connectivity, census).rows
        assert len(back) == len(rows)
        by_key = {(r.code, r.year): r for r in back}
        for r in rows:
            b = by_key[(r.code, r.year)]
            # boolean counts round to the nearest student
            tol_pct = 100.0 / (2 * r.n_students) + 1e-9
            assert abs(b.internet_pct - r.internet_pct) <= tol_pct
            assert abs(b.computer_pct - r.computer_pct) <= tol_pct
            assert b.global_score_mean == pytest.approx(r.global_score_mean, abs=1e-6)
            # subscribers round to one subscription
            assert abs(b.connectivity - r.connectivity) <= 1000.0 / (2 * r.population) + 1e-9

    def test_written_tables_parse_back(self, tmp_path):
        cfg = planted_config(n_municipalities=5, years=(2018,))
        rows = dataset.generate_synthetic(cfg, 1)
        students, connectivity, census = dataset.synth_source_tables(rows, 2)
        bufs = [io.StringIO() for _ in range(3)]
        dataset.write_source_tables(students, connectivity, census, *bufs)
        s2, errs = dataset.parse_students(io.StringIO(bufs[0].getvalue()))
        assert not errs and len(s2) == len(students)
        c2, _ = dataset.parse_connectivity(io.StringIO(bufs[1].getvalue()))
        x2, _ = dataset.parse_census(io.StringIO(bufs[2].getvalue()))
        assert c2 == connectivity and x2 == census
