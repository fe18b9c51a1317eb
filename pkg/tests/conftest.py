import datetime as dt
import json

import pytest

from covidfit.synthetic import write_fixture_dataset

D0 = dt.date(2020, 3, 17)


@pytest.fixture(scope="session")
def fixture_raw(tmp_path_factory):
    """Raw files for all five sources, generated once per session."""
    directory = tmp_path_factory.mktemp("raw")
    write_fixture_dataset(directory)
    return directory


def write_config(path, raw_dir, out_dir, **extra):
    doc = {
        "data_dir": str(raw_dir),
        "output_dir": str(out_dir),
        "sources": [
            {"file": "deaths.csv", "adapter": "insee_deaths"},
            {"file": "hosp.csv", "adapter": "hosp_incidence"},
            {"file": "inserm.csv", "adapter": "inserm_cert"},
            {"file": "tests.csv", "adapter": "tests"},
            {"file": "sos.csv", "adapter": "emergency_sos"},
        ],
    }
    doc.update(extra)
    path.write_text(json.dumps(doc))
    return path


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
