"""Print one PASS/FAIL line per acceptance criterion without pytest."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import test_acceptance  # noqa: E402

if __name__ == "__main__":
    sys.exit(test_acceptance.main())
