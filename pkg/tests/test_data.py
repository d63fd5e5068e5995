import numpy as np
import pytest

from stmix.data import (
    Dataset,
    inverse_mercator,
    load_dataset,
    load_targets,
    mercator_project,
    save_dataset,
)
from stmix.exceptions import DataValidationError

MINIMAL_CSV = """site_id,date,longitude,latitude,y,temp
a,2004-06-01,-80.0,34.0,5.1,20.0
a,2004-06-02,-80.0,34.0,5.3,22.0
b,2004-06-01,-81.0,35.0,4.2,18.0
b,2004-06-02,-81.0,35.0,,19.0
"""


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestProjection:
    def test_one_degree_longitude_at_reference(self):
        x1, y1 = mercator_project(-80.0, 34.0, 34.0)
        x2, y2 = mercator_project(-79.0, 34.0, 34.0)
        assert y1 == y2
        assert x2 - x1 == pytest.approx(111.19 * np.cos(np.deg2rad(34.0)), abs=0.05)

    def test_identical_points_zero_distance(self):
        a = mercator_project(-80.0, 34.0, 33.0)
        b = mercator_project(-80.0, 34.0, 33.0)
        assert a == b

    def test_monotone_in_longitude(self):
        lons = np.linspace(-90, -70, 50)
        x, _ = mercator_project(lons, np.full(50, 34.0), 34.0)
        assert np.all(np.diff(x) > 0)

    def test_polar_latitude_rejected(self):
        with pytest.raises(ValueError):
            mercator_project(0.0, 86.0, 34.0)

    def test_inverse_roundtrip(self):
        lon, lat = np.array([-80.0, -81.5]), np.array([33.0, 35.5])
        x, y = mercator_project(lon, lat, 34.0)
        lon2, lat2 = inverse_mercator(x, y, 34.0)
        np.testing.assert_allclose(lon2, lon, atol=1e-12)
        np.testing.assert_allclose(lat2, lat, atol=1e-12)

    def test_distances_form_a_metric(self):
        rng = np.random.default_rng(0)
        lon = rng.uniform(-85, -75, 8)
        lat = rng.uniform(32, 36, 8)
        x, y = mercator_project(lon, lat, float(lat.mean()))
        pts = np.column_stack([x, y])
        from scipy.spatial.distance import cdist

        D = cdist(pts, pts)
        np.testing.assert_allclose(D, D.T, atol=1e-12)
        for i in range(8):
            for j in range(8):
                for k in range(8):
                    assert D[i, j] <= D[i, k] + D[k, j] + 1e-9


class TestLoadDataset:
    def test_minimal_file(self, tmp_path):
        data = load_dataset(write(tmp_path, MINIMAL_CSV))
        assert data.n_sites == 2 and data.n_times == 2
        assert data.n_observed == 3
        assert not data.mask[1, 1]
        assert data.covariate_names == ["intercept", "temp"]
        np.testing.assert_array_equal(data.X[:, :, 0], 1.0)

    def test_standardization_invariant_and_record(self, tmp_path):
        data = load_dataset(write(tmp_path, MINIMAL_CSV))
        col = data.X[:, :, 1][data.mask]
        assert col.mean() == pytest.approx(0.0, abs=1e-12)
        assert col.std(ddof=1) == pytest.approx(1.0, rel=1e-12)
        mean, sd = data.standardization["temp"]
        raw = data.raw_covariates()[:, :, 0][data.mask]
        np.testing.assert_allclose(raw, [20.0, 22.0, 18.0], atol=1e-10)

    def test_roundtrip_through_save(self, tmp_path):
        data = load_dataset(write(tmp_path, MINIMAL_CSV))
        out = tmp_path / "echo.csv"
        save_dataset(data, out)
        again = load_dataset(out)
        np.testing.assert_allclose(again.y[again.mask], data.y[data.mask], atol=1e-12)
        np.testing.assert_array_equal(again.mask, data.mask)
        np.testing.assert_allclose(again.X, data.X, atol=1e-9)
        # second save is byte-identical to the first
        out2 = tmp_path / "echo2.csv"
        save_dataset(again, out2)
        assert out.read_bytes() == out2.read_bytes()

    def test_duplicate_cell_reports_both_rows(self, tmp_path):
        text = MINIMAL_CSV + "a,2004-06-02,-80.0,34.0,9.9,21.0\n"
        with pytest.raises(DataValidationError) as err:
            load_dataset(write(tmp_path, text))
        msg = str(err.value)
        assert "3" in msg and "6" in msg  # both row numbers

    def test_missing_required_column(self, tmp_path):
        text = MINIMAL_CSV.replace("longitude", "lng")
        with pytest.raises(DataValidationError, match="longitude"):
            load_dataset(write(tmp_path, text))

    def test_non_numeric_field_diagnosed(self, tmp_path):
        text = MINIMAL_CSV.replace("5.3", "oops")
        with pytest.raises(DataValidationError, match="row 3.*'y'"):
            load_dataset(write(tmp_path, text))

    def test_gap_in_dates_rejected(self, tmp_path):
        text = MINIMAL_CSV.replace("2004-06-02", "2004-06-04")
        with pytest.raises(DataValidationError, match="consecutive"):
            load_dataset(write(tmp_path, text))

    def test_season_column_allows_gaps(self, tmp_path):
        text = (
            "site_id,date,longitude,latitude,y,season,temp\n"
            "a,2004-06-01,-80.0,34.0,5.1,2004,20.0\n"
            "a,2004-06-02,-80.0,34.0,5.3,2004,22.0\n"
            "a,2005-06-01,-80.0,34.0,4.9,2005,19.0\n"
            "a,2005-06-02,-80.0,34.0,4.2,2005,23.0\n"
        )
        data = load_dataset(write(tmp_path, text))
        np.testing.assert_array_equal(data.time_blocks, [0, 0, 1, 1])

    def test_integer_dates(self, tmp_path):
        text = (
            "site_id,date,longitude,latitude,y,temp\n"
            "a,1,-80.0,34.0,5.1,20.0\n"
            "a,2,-80.0,34.0,5.3,22.0\n"
            "a,3,-80.0,34.0,5.0,25.0\n"
        )
        data = load_dataset(write(tmp_path, text))
        assert data.n_times == 3
        assert data.index_for_date(2) == 1
        assert data.index_for_date(7) == 6  # beyond the training range

    def test_inconsistent_site_coordinates(self, tmp_path):
        text = MINIMAL_CSV + "a,2004-06-03,-80.5,34.0,5.0,21.0\n"
        # need b rows for the same date to keep the grid; coordinate check
        # fires before contiguity
        with pytest.raises(DataValidationError, match="coordinates differ"):
            load_dataset(write(tmp_path, text))


class TestTargets:
    def test_targets_standardized_with_training_record(self, tmp_path):
        data = load_dataset(write(tmp_path, MINIMAL_CSV))
        targets_csv = write(
            tmp_path,
            "longitude,latitude,date,temp,y\n"
            "-80.5,34.5,2004-06-02,20.0,4.8\n"
            "-80.0,34.0,2004-06-05,25.0,\n",
            name="targets.csv",
        )
        points, truth = load_targets(targets_csv, data)
        assert len(points) == 2
        mean, sd = data.standardization["temp"]
        assert points[0].x[1] == pytest.approx((20.0 - mean) / sd)
        assert points[0].t == 1
        assert points[1].t == 4  # extrapolated past training days
        assert np.isnan(truth[1]) and truth[0] == pytest.approx(4.8)

    def test_missing_covariate_column_rejected(self, tmp_path):
        data = load_dataset(write(tmp_path, MINIMAL_CSV))
        bad = write(
            tmp_path, "longitude,latitude,date\n-80,34,2004-06-01\n", name="bad.csv"
        )
        with pytest.raises(DataValidationError, match="temp"):
            load_targets(bad, data)
