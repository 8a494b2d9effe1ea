#!/usr/bin/env python3
"""
Test Runner for the Radon discretization library

Runs the unit tests (and, with --runslow, the desk-scale experiments).
Verifies all dependencies are properly installed before running tests.
"""

import importlib
import os
import sys
import subprocess
from pathlib import Path

REQUIRED_MODULES = [
    ("pytest", "pytest"),
    ("hypothesis", "hypothesis"),
    ("numpy", "numpy"),
    ("numba", "numba"),
    ("scipy", "scipy"),
    ("tqdm", "tqdm"),
    ("peewee", "peewee"),
    ("dotenv", "python-dotenv"),
]

TEST_DIRS = [
    "shared/models/tests/",
    "services/projection/tests/",
    "services/phantoms/tests/",
    "services/experiments/tests/",
    "services/cli/tests/",
]


def check_python_version():
    """Check if we're using Python 3.10 or newer."""
    version = sys.version_info
    if version >= (3, 10):
        print(f"✓ Using Python {version.major}.{version.minor}.{version.micro}")
        return True
    else:
        print(f"✗ Using Python {version.major}.{version.minor}.{version.micro}, need Python 3.10+")
        return False


def verify_dependencies():
    """Verify all required dependencies are installed."""
    print("Verifying dependencies...")
    missing = []
    for module, package in REQUIRED_MODULES:
        try:
            importlib.import_module(module)
            print(f"✓ {package} is available")
        except ImportError:
            print(f"✗ {package} is not installed")
            missing.append(package)

    if missing:
        print(f"Install with: pip install {' '.join(missing)}")
        return False
    return True


def run_tests(runslow: bool = False):
    """Run the test suite."""
    # Ensure we're in the project root
    project_root = Path(__file__).parent
    os.chdir(project_root)

    if not check_python_version():
        return False

    if not verify_dependencies():
        print("Dependencies verification failed. Please install missing dependencies.")
        return False

    env = os.environ.copy()
    env['PYTHONPATH'] = f"{project_root}:{env.get('PYTHONPATH', '')}"
    # progress bars only clutter pytest output
    env['RADON_PROGRESS'] = env.get('RADON_PROGRESS', '0')

    cmd = [sys.executable, "-m", "pytest", "--tb=short", "--verbose", *TEST_DIRS]
    if runslow:
        cmd.append("--runslow")

    print("Running tests...")
    print(f"Command: {' '.join(cmd)}")
    print(f"PYTHONPATH: {env['PYTHONPATH']}")

    result = subprocess.run(cmd, env=env)
    return result.returncode == 0


def main():
    """Main entry point."""
    print("Radon Discretization Test Runner")
    print("=" * 40)

    if run_tests(runslow="--runslow" in sys.argv[1:]):
        print("\n✓ All tests passed!")
        sys.exit(0)
    else:
        print("\n✗ Some tests failed!")
        sys.exit(1)


if __name__ == "__main__":
    main()
