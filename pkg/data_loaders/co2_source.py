"""
Fetch the Mauna Loa monthly CO2 record from a public source.

The repository ships only a tiny fixture; this client downloads the NOAA
GML monthly mean CSV and writes the ``year,month,ppm`` file that
``data_loaders.co2.load_co2`` reads.

Public sources:
    NOAA GML monthly means  https://gml.noaa.gov/webdata/ccgg/trends/co2/co2_mm_mlo.csv
    Scripps CO2 program     https://scrippsco2.ucsd.edu/data/atmospheric_co2/mlo.html
"""

import io
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import requests

from data_loaders.co2 import CO2_COLUMNS, CO2_FILE
from utils.errors import FormatError

NOAA_MONTHLY_URL = "https://gml.noaa.gov/webdata/ccgg/trends/co2/co2_mm_mlo.csv"
MISSING_VALUE = -99.99

# 216 monthly readings, 1965-1982
DEFAULT_START_YEAR = 1965
DEFAULT_END_YEAR = 1982


class Co2SourceClient:
    """Client for the NOAA monthly CO2 CSV."""

    def __init__(self, url: str = NOAA_MONTHLY_URL, timeout: float = 30.0):
        """
        Initialize the client.

        Args:
            url: CSV location
            timeout: Request timeout in seconds
        """
        self.url = url
        self.timeout = timeout
        self.session = requests.Session()

    def fetch_text(self) -> str:
        """
        Download the raw CSV text.

        Raises:
            requests.exceptions.RequestException: On network or HTTP errors
        """
        response = self.session.get(self.url, timeout=self.timeout)
        response.raise_for_status()
        return response.text

    def fetch_monthly(self, start_year: int = DEFAULT_START_YEAR, end_year: int = DEFAULT_END_YEAR) -> pd.DataFrame:
        """
        Monthly readings for [start_year, end_year] as a year/month/ppm frame.
        """
        return parse_noaa_monthly(self.fetch_text(), start_year, end_year)


def parse_noaa_monthly(text: str, start_year: int, end_year: int) -> pd.DataFrame:
    """
    Convert the NOAA CSV (``#`` comment lines, ``average`` column) to year/month/ppm.

    Missing months (-99.99) are filled by linear interpolation.

    Raises:
        FormatError: If the expected columns are absent or the range is empty
    """
    frame = pd.read_csv(io.StringIO(text), comment="#", skipinitialspace=True)
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in ("year", "month", "average"):
        if column not in frame.columns:
            raise FormatError(f"NOAA CSV has no '{column}' column")
    frame = frame[(frame["year"] >= start_year) & (frame["year"] <= end_year)]
    if frame.empty:
        raise FormatError(f"no readings between {start_year} and {end_year}")
    ppm = frame["average"].astype(float).replace(MISSING_VALUE, np.nan).interpolate(limit_direction="both")
    return pd.DataFrame({"year": frame["year"].astype(int), "month": frame["month"].astype(int), "ppm": ppm.round(2)})


def save_series_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame[CO2_COLUMNS].to_csv(path, index=False, lineterminator="\n")
    return path


def main(out: Optional[str] = None):
    """Download the default range into data/co2.csv."""
    target = Path(out) if out else Path("data") / CO2_FILE
    print("🌍 Fetching Mauna Loa monthly CO2 readings...")
    try:
        frame = Co2SourceClient().fetch_monthly()
    except requests.exceptions.RequestException as e:
        print(f"❌ Download failed: {e}")
        return 1
    save_series_csv(frame, target)
    print(f"✅ Saved {len(frame)} months to {target}")
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else None))
