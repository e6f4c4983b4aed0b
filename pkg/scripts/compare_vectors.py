from pathlib import Path
import sys

import numpy as np
import pandas as pd


def compare_vector_files(file1, file2, tolerance=1e-10):
    """Compare two vector files value by value and report the largest relative difference."""
    path1 = Path(file1)
    path2 = Path(file2)

    if not path1.exists() or not path2.exists():
        print("One or both files do not exist!")
        return False

    y1 = pd.read_csv(path1, sep='\\s+', header=None, float_precision='round_trip')[0].to_numpy()
    y2 = pd.read_csv(path2, sep='\\s+', header=None, float_precision='round_trip')[0].to_numpy()

    if len(y1) != len(y2):
        print(f"Length mismatch: {path1.name} has {len(y1)} values, {path2.name} has {len(y2)}")
        return False

    diff = np.abs(y1 - y2)
    scale = max(1.0, float(np.max(np.abs(y2)))) if len(y2) else 1.0
    worst = float(np.max(diff)) / scale if len(diff) else 0.0
    print(f"{len(y1)} values, max relative difference {worst:.3e}")
    if worst > tolerance:
        index = int(np.argmax(diff))
        print(f"First largest difference at line {index + 1}: {y1[index]!r} vs {y2[index]!r}")
        return False
    return True


if __name__ == "__main__":
    if len(sys.argv) not in (3, 4):
        print("Usage: python compare_vectors.py <y1.txt> <y2.txt> [tolerance]")
        sys.exit(1)

    tolerance = float(sys.argv[3]) if len(sys.argv) == 4 else 1e-10
    sys.exit(0 if compare_vector_files(sys.argv[1], sys.argv[2], tolerance) else 1)
