"""Dataset container, CSV ingestion, coordinate projection, standardization.

The on-disk format is a CSV with header columns

    site_id, date, longitude, latitude, y, <covariate columns...>

plus an optional ``season`` column.  ``date`` is either an integer index or
an ISO ``YYYY-MM-DD`` date; dates must form a contiguous daily sequence,
except across season boundaries when a season column is present (temporal
adjacency is zeroed across those breaks).  Missing responses are empty
fields.  Covariates are standardized to mean 0, SD 1 over observed cells
(the record of means and SDs is kept so raw values can be reconstructed)
and an intercept column is prepended.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataValidationError

EARTH_RADIUS_KM = 6371.0

REQUIRED_COLUMNS = ("site_id", "date", "longitude", "latitude", "y")
SEASON_COLUMN = "season"


def mercator_project(lon_deg, lat_deg, ref_lat_deg):
    """Project lon/lat degrees to (x, y) km on a simple Mercator cylinder.

    x = R cos(phi0) * lon_rad, y = R cos(phi0) * ln tan(pi/4 + lat_rad / 2)
    with R = 6371 km and phi0 the reference latitude.  The formula is fixed
    so projected distances are reproducible exactly from the inputs.
    """
    lon = np.asarray(lon_deg, dtype=float)
    lat = np.asarray(lat_deg, dtype=float)
    if np.any(np.abs(lat) >= 85.0) or abs(ref_lat_deg) >= 85.0:
        raise ValueError("latitudes must satisfy |lat| < 85 degrees")
    k = EARTH_RADIUS_KM * np.cos(np.deg2rad(ref_lat_deg))
    x = k * np.deg2rad(lon)
    y = k * np.log(np.tan(np.pi / 4.0 + np.deg2rad(lat) / 2.0))
    return x, y


def inverse_mercator(x_km, y_km, ref_lat_deg):
    """Invert :func:`mercator_project` back to lon/lat degrees."""
    k = EARTH_RADIUS_KM * np.cos(np.deg2rad(ref_lat_deg))
    lon = np.rad2deg(np.asarray(x_km, dtype=float) / k)
    lat = np.rad2deg(2.0 * np.arctan(np.exp(np.asarray(y_km, dtype=float) / k)) - np.pi / 2.0)
    return lon, lat


def _parse_date(text, row_num):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return _dt.date.fromisoformat(text)
    except ValueError:
        raise DataValidationError(
            f"row {row_num}: date {text!r} is neither an integer nor YYYY-MM-DD"
        ) from None


def _date_successor(d):
    return d + 1 if isinstance(d, int) else d + _dt.timedelta(days=1)


@dataclass(eq=False)
class Dataset:
    """Responses, covariates and coordinates on an N-site x T-time grid."""

    site_ids: list
    lon: np.ndarray
    lat: np.ndarray
    coords: np.ndarray                 # (N, 2) projected km
    ref_lat: float
    time_labels: list                  # original date values, length T
    time_blocks: np.ndarray            # (T,) int; AR adjacency broken across blocks
    y: np.ndarray                      # (N, T), NaN where missing
    mask: np.ndarray                   # (N, T) bool, True = observed
    X: np.ndarray                      # (N, T, p), column 0 is the intercept
    covariate_names: list              # length p, first entry "intercept"
    standardization: dict = field(default_factory=dict)

    @property
    def n_sites(self) -> int:
        return self.y.shape[0]

    @property
    def n_times(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.X.shape[2]

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def index_for_date(self, value):
        """Time index for a date value; extends past the last training date."""
        if value in self._label_index():
            return self._label_index()[value]
        last = self.time_labels[-1]
        if type(value) is not type(last):
            raise DataValidationError(
                f"date {value!r} does not match the dataset's date type"
            )
        if value > last:
            delta = (value - last) if isinstance(value, int) else (value - last).days
            return self.n_times - 1 + int(delta)
        raise DataValidationError(f"date {value!r} not in the dataset's range")

    def _label_index(self):
        if not hasattr(self, "_label_map"):
            self._label_map = {d: i for i, d in enumerate(self.time_labels)}
        return self._label_map

    def with_mask(self, new_mask) -> "Dataset":
        """Copy of the dataset observing only ``new_mask`` cells.

        Covariates and latent structure are untouched; only which responses
        are visible changes.
        """
        new_mask = np.asarray(new_mask, dtype=bool)
        if new_mask.shape != self.mask.shape:
            raise ValueError("mask shape mismatch")
        if np.any(new_mask & ~self.mask):
            raise ValueError("cannot observe a cell that has no response")
        y = np.where(new_mask, self.y, np.nan)
        return Dataset(
            site_ids=list(self.site_ids),
            lon=self.lon.copy(),
            lat=self.lat.copy(),
            coords=self.coords.copy(),
            ref_lat=self.ref_lat,
            time_labels=list(self.time_labels),
            time_blocks=self.time_blocks.copy(),
            y=y,
            mask=new_mask.copy(),
            X=self.X,
            covariate_names=list(self.covariate_names),
            standardization=dict(self.standardization),
        )

    def raw_covariates(self) -> np.ndarray:
        """Covariates with standardization undone (intercept column dropped)."""
        raw = np.empty_like(self.X[:, :, 1:])
        for k, name in enumerate(self.covariate_names[1:]):
            mean, sd = self.standardization[name]
            raw[:, :, k] = self.X[:, :, k + 1] * sd + mean
        return raw


def standardize_columns(values, mask, names):
    """Standardize (N, T, k) covariates over observed cells; returns record."""
    out = np.array(values, dtype=float)
    record = {}
    for k, name in enumerate(names):
        col = out[:, :, k][mask]
        mean = float(np.mean(col))
        sd = float(np.std(col, ddof=1)) if col.size > 1 else 0.0
        if sd == 0.0:
            raise DataValidationError(
                f"covariate {name!r} is constant over observed cells"
            )
        out[:, :, k] = (out[:, :, k] - mean) / sd
        record[name] = (mean, sd)
    return out, record


def load_dataset(path, ref_lat=None) -> Dataset:
    """Load and validate a dataset CSV (schema in the module docstring)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise DataValidationError(f"{path}: missing required column {col!r}")
        col_idx = {name: i for i, name in enumerate(header)}
        covariate_cols = [
            h for h in header if h not in REQUIRED_COLUMNS and h != SEASON_COLUMN
        ]
        has_season = SEASON_COLUMN in header

        rows = []
        for row_num, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}: row {row_num} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            rows.append((row_num, row))

    if not rows:
        raise DataValidationError(f"{path}: no data rows")

    def numeric(row_num, row, col):
        text = row[col_idx[col]].strip()
        try:
            return float(text)
        except ValueError:
            raise DataValidationError(
                f"{path}: row {row_num}, column {col!r}: "
                f"non-numeric value {text!r}"
            ) from None

    sites = {}
    dates = set()
    parsed = []
    for row_num, row in rows:
        sid = row[col_idx["site_id"]].strip()
        date = _parse_date(row[col_idx["date"]], row_num)
        lon = numeric(row_num, row, "longitude")
        lat = numeric(row_num, row, "latitude")
        y_text = row[col_idx["y"]].strip()
        y_val = float("nan") if y_text == "" else numeric(row_num, row, "y")
        covs = [numeric(row_num, row, c) for c in covariate_cols]
        season = row[col_idx[SEASON_COLUMN]].strip() if has_season else ""
        if sid in sites:
            if not (
                np.isclose(sites[sid][0], lon) and np.isclose(sites[sid][1], lat)
            ):
                raise DataValidationError(
                    f"{path}: row {row_num}: site {sid!r} coordinates differ "
                    f"from an earlier row"
                )
        else:
            sites[sid] = (lon, lat)
        dates.add(date)
        parsed.append((row_num, sid, date, y_val, covs, season))

    if len({type(d) for d in dates}) > 1:
        raise DataValidationError(f"{path}: mixed integer and calendar dates")

    site_ids = sorted(sites)
    date_list = sorted(dates)
    site_pos = {s: i for i, s in enumerate(site_ids)}
    date_pos = {d: i for i, d in enumerate(date_list)}
    N, T, p_raw = len(site_ids), len(date_list), len(covariate_cols)

    # season blocks: consecutive dates sharing a season label form a block
    date_season = {}
    for row_num, sid, date, _, _, season in parsed:
        prev = date_season.get(date)
        if prev is not None and prev[0] != season:
            raise DataValidationError(
                f"{path}: row {row_num}: date {date} assigned to two seasons"
            )
        date_season[date] = (season, row_num)

    time_blocks = np.zeros(T, dtype=int)
    block = 0
    for i in range(1, T):
        contiguous = date_list[i] == _date_successor(date_list[i - 1])
        same_season = (
            not has_season
            or date_season[date_list[i]][0] == date_season[date_list[i - 1]][0]
        )
        if contiguous and same_season:
            time_blocks[i] = block
        elif has_season and not same_season:
            block += 1
            time_blocks[i] = block
        else:
            raise DataValidationError(
                f"{path}: dates {date_list[i - 1]} and {date_list[i]} are not "
                f"consecutive days; split seasons with a 'season' column"
            )

    y = np.full((N, T), np.nan)
    seen = {}
    raw_X = np.zeros((N, T, p_raw))
    cell_filled = np.zeros((N, T), dtype=bool)
    for row_num, sid, date, y_val, covs, _ in parsed:
        i, t = site_pos[sid], date_pos[date]
        if (i, t) in seen:
            raise DataValidationError(
                f"{path}: duplicate (site, date) = ({sid!r}, {date}) "
                f"at rows {seen[(i, t)]} and {row_num}"
            )
        seen[(i, t)] = row_num
        y[i, t] = y_val
        raw_X[i, t, :] = covs
        cell_filled[i, t] = True

    mask = np.isfinite(y)
    if not mask.any():
        raise DataValidationError(f"{path}: every response is missing")

    lon = np.array([sites[s][0] for s in site_ids])
    lat = np.array([sites[s][1] for s in site_ids])
    if ref_lat is None:
        ref_lat = float(np.mean(lat))
    xs, ys = mercator_project(lon, lat, ref_lat)
    coords = np.column_stack([xs, ys])

    if p_raw:
        std_X, record = standardize_columns(raw_X, mask, covariate_cols)
        std_X[~cell_filled] = 0.0  # absent cells sit at the standardized mean
    else:
        std_X, record = raw_X, {}
    X = np.concatenate([np.ones((N, T, 1)), std_X], axis=2)

    return Dataset(
        site_ids=site_ids,
        lon=lon,
        lat=lat,
        coords=coords,
        ref_lat=ref_lat,
        time_labels=date_list,
        time_blocks=time_blocks,
        y=y,
        mask=mask,
        X=X,
        covariate_names=["intercept"] + covariate_cols,
        standardization=record,
    )


def save_dataset(data: Dataset, path):
    """Write a dataset back to CSV in the load schema (raw covariate units)."""
    raw = data.raw_covariates()
    has_season = len(np.unique(data.time_blocks)) > 1
    header = list(REQUIRED_COLUMNS) + (
        [SEASON_COLUMN] if has_season else []
    ) + data.covariate_names[1:]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, sid in enumerate(data.site_ids):
            for t, date in enumerate(data.time_labels):
                row = [
                    sid,
                    date.isoformat() if isinstance(date, _dt.date) else date,
                    repr(float(data.lon[i])),
                    repr(float(data.lat[i])),
                    repr(float(data.y[i, t])) if data.mask[i, t] else "",
                ]
                if has_season:
                    row.append(int(data.time_blocks[t]))
                row.extend(repr(float(v)) for v in raw[i, t, :])
                writer.writerow(row)


def load_targets(path, data: Dataset):
    """Read prediction targets colocated with the training covariate schema.

    Columns: longitude, latitude, date, the training covariate columns (raw
    units), and optionally ``y`` with held-out truth.  Returns
    ``(points, truth)`` where points is a list of
    :class:`~stmix.covariance.SpaceTimePoint` (standardized covariates,
    training projection) and truth is an array or None.
    """
    from .covariance import SpaceTimePoint

    needed = ["longitude", "latitude", "date"] + data.covariate_names[1:]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataValidationError(f"{path}: empty targets file")
        for col in needed:
            if col not in reader.fieldnames:
                raise DataValidationError(f"{path}: missing target column {col!r}")
        has_truth = "y" in reader.fieldnames
        points, truth = [], []
        for row_num, row in enumerate(reader, start=2):
            try:
                lon = float(row["longitude"])
                lat = float(row["latitude"])
            except ValueError:
                raise DataValidationError(
                    f"{path}: row {row_num}: non-numeric coordinates"
                ) from None
            date = _parse_date(row["date"], row_num)
            t = data.index_for_date(date)
            x = [1.0]
            for name in data.covariate_names[1:]:
                try:
                    v = float(row[name])
                except ValueError:
                    raise DataValidationError(
                        f"{path}: row {row_num}, column {name!r}: non-numeric"
                    ) from None
                mean, sd = data.standardization[name]
                x.append((v - mean) / sd)
            px, py = mercator_project(lon, lat, data.ref_lat)
            points.append(SpaceTimePoint(s=(float(px), float(py)), t=t, x=x))
            if has_truth:
                txt = (row["y"] or "").strip()
                truth.append(float(txt) if txt else np.nan)
    return points, (np.array(truth) if has_truth else None)
