import sys
from pathlib import Path

# the toy model corpus ships with the reference package's tests
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
