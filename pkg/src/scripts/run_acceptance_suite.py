#!/usr/bin/env python3
"""
run_acceptance_suite.py - Run the pytest checks behind the numbered acceptance criteria.

Usage:
    python src/scripts/run_acceptance_suite.py --list
    python src/scripts/run_acceptance_suite.py --criterion 3
    python src/scripts/run_acceptance_suite.py --all
    python src/scripts/run_acceptance_suite.py --all --include-slow

Modes:
    --criterion N:   Run the tests of one criterion (slow ones included)
    --all:           Run every fast criterion
    --include-slow:  With --all, also run the minutes-scale replications

Returns exit code 0 if all tests pass, non-zero if any fail.
"""

import argparse
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

SRC_DIR = Path(__file__).resolve().parent.parent
ACCEPTANCE_FILE = "tests/test_acceptance.py"


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    test_class: str
    slow: bool = False

    @property
    def node_id(self) -> str:
        return f"{ACCEPTANCE_FILE}::{self.test_class}"


CRITERIA: dict[int, Criterion] = {
    c.number: c
    for c in (
        Criterion(1, "Gradient oracle", "TestGradientOracle"),
        Criterion(2, "Unitarity and valid output states", "TestUnitarityAndStates", slow=True),
        Criterion(3, "Full-register equivalence", "TestEquivalenceOracle"),
        Criterion(4, "Line dataset replication", "TestLineReplication", slow=True),
        Criterion(5, "Clusters dataset replication", "TestClustersReplication", slow=True),
        Criterion(6, "Single-pair convergence", "TestSinglePairConvergence", slow=True),
        Criterion(7, "Fidelity-threshold graphs", "TestFidelityThresholdGraphs"),
        Criterion(8, "Deterministic replicate output", "TestDeterminism"),
    )
}


def run_criterion_command(criterion: Criterion, cmd_parts: list[str], capture: bool = False) -> int:
    """Run pytest for one criterion from ``SRC_DIR``; 127 when pytest is missing.

    With ``capture``, a passing run prints only pytest's closing line and a
    failing run prints everything.
    """
    try:
        result = subprocess.run(cmd_parts, cwd=SRC_DIR, capture_output=capture, text=True)
    except FileNotFoundError:
        print(f"Criterion {criterion.number}: {cmd_parts[0]!r} not found; install the dev extras")
        return 127
    except OSError as e:
        print(f"Criterion {criterion.number}: cannot start {cmd_parts[0]!r}: {e}")
        return 1

    if capture:
        lines = result.stdout.strip().splitlines()
        if result.returncode == 0:
            print(lines[-1] if lines else "(no pytest output)")
        else:
            print(result.stdout)
            print(result.stderr, file=sys.stderr)
    return result.returncode


def pytest_command(criteria: list[Criterion], include_slow: bool, verbose: bool) -> list[str]:
    """Build the pytest invocation for ``criteria``.

    pytest.ini deselects slow tests by default, so the marker expression is
    always given explicitly.
    """
    marker = "acceptance" if include_slow else "acceptance and not slow"
    cmd_parts = ["pytest", *[c.node_id for c in criteria], "-m", marker]
    if verbose:
        cmd_parts.append("-v")
    return cmd_parts


def run_criteria(
    criteria: list[Criterion],
    include_slow: bool = False,
    verbose: bool = False,
    capture: bool = False,
) -> int:
    """Run each criterion separately and print a summary.

    Returns:
        Exit code (0 = pass, non-zero = fail)
    """
    results: dict[int, int] = {}
    for criterion in criteria:
        if criterion.slow and not include_slow:
            continue
        print("=" * 60)
        print(f"CRITERION {criterion.number}: {criterion.name}")
        print("=" * 60)
        print(f"Running: pytest {criterion.node_id}")
        print("-" * 60)
        cmd_parts = pytest_command([criterion], include_slow, verbose)
        results[criterion.number] = run_criterion_command(criterion, cmd_parts, capture)

    print("\n" + "=" * 60)
    print("TEST SUMMARY")
    print("=" * 60)

    if not results:
        print("No criteria selected (slow criteria need --include-slow)")
        return 1

    all_passed = True
    for number, exit_code in results.items():
        status = "[PASSED]" if exit_code == 0 else "[FAILED]"
        print(f"  {number}. {CRITERIA[number].name}: {status}")
        if exit_code != 0:
            all_passed = False

    print("-" * 60)
    if all_passed:
        print("All acceptance criteria PASSED")
        return 0
    print("Some acceptance criteria FAILED")
    return 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Run the acceptance criteria of qnn-graphlearn",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # List criteria
  python run_acceptance_suite.py --list

  # Run one criterion
  python run_acceptance_suite.py --criterion 1

  # Run everything, including the replication runs
  python run_acceptance_suite.py --all --include-slow
""",
    )
    parser.add_argument(
        "--criterion", "-c", type=int, choices=sorted(CRITERIA), help="Criterion number"
    )
    parser.add_argument("--all", "-a", action="store_true", help="Run every criterion")
    parser.add_argument(
        "--include-slow", action="store_true", help="Also run minutes-scale criteria"
    )
    parser.add_argument("--list", "-l", action="store_true", help="List criteria and exit")
    parser.add_argument("--verbose", "-v", action="store_true", help="Show verbose test output")
    parser.add_argument(
        "--capture", action="store_true", help="Capture output instead of streaming"
    )

    args = parser.parse_args(argv)

    if args.list:
        print("Acceptance criteria:")
        for criterion in CRITERIA.values():
            suffix = " (slow)" if criterion.slow else ""
            print(f"  {criterion.number}. {criterion.name}{suffix}")
        return 0

    if args.all:
        return run_criteria(
            list(CRITERIA.values()), args.include_slow, args.verbose, args.capture
        )

    if args.criterion is None:
        parser.error("--criterion is required unless using --list or --all")

    criterion = CRITERIA[args.criterion]
    return run_criteria([criterion], include_slow=True, verbose=args.verbose, capture=args.capture)


if __name__ == "__main__":
    sys.exit(main())
