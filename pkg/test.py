"""
run `python test.py` from the repo root so the package is importable
without installing it; extra arguments go straight to pytest
ex. `python test.py -m "not slow"`
"""
import sys

import pytest

sys.exit(pytest.main(sys.argv[1:]))
