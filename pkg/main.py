#!/usr/bin/env python3
"""
Terrain Mapping - Main Entry Point

Builds dense elevation and traversability maps from LiDAR sequences and
evaluates them against labelled or synthetic ground truth.

Usage:
    python main.py --help                               # Show help
    python main.py synth curb data/curb                 # Write a synthetic sequence
    python main.py run data/curb/manifest.env           # Build maps for every frame
    python main.py eval --scene curb                    # Score a synthetic scene
    python main.py ablate --scene curb                  # Compare fusion/inference variants
    python main.py plan output/cost/000004.csv --start 199,200 --goal 150,200

Configuration:
    Copy the sample configuration and adjust it:
    cp config/pipeline.env.sample pipeline.env
    python main.py --config pipeline.env run ...

    Any key can also be set with TERRAIN_<KEY> environment variables or
    --set KEY=VALUE on the command line.

Requirements:
    - Python 3.9+
    - Dependencies from requirements.txt
"""

import sys
from pathlib import Path

# Add src directory to Python path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))

# Import CLI after path setup
from src.cli.commands import cli


def check_environment():
    """Check if the environment is properly set up."""
    issues = []

    if sys.version_info < (3, 9):
        issues.append(f"Python 3.9+ required, found {sys.version_info.major}.{sys.version_info.minor}")

    for module in ("numpy", "scipy", "pandas", "pydantic"):
        try:
            __import__(module)
        except ImportError:
            issues.append(f"Missing dependency '{module}'. Run: pip install -r requirements.txt")

    return issues


def print_banner():
    """Print application banner."""
    banner = """
╔══════════════════════════════════════════════════════════════════════════════╗
║                              Terrain Mapping                                 ║
║              Dense elevation and traversability maps from LiDAR              ║
║                                                                              ║
║  • Rolling grid with NDT / Kalman multi-frame fusion                         ║
║  • Bilateral Bayesian Generalized Kernel elevation inference                 ║
║  • Local-convexity traversability, travel cost and A* planning               ║
║  • Synthetic scenes, virtual LiDAR and ground-truth evaluation               ║
╚══════════════════════════════════════════════════════════════════════════════╝
    """
    print(banner, file=sys.stderr)


def main():
    """Main entry point with environment validation."""
    issues = check_environment()
    if issues:
        print("Environment Issues Found:", file=sys.stderr)
        for issue in issues:
            print(f"   • {issue}", file=sys.stderr)
        sys.exit(1)

    if len(sys.argv) == 1:
        print_banner()
        print("Usage: python main.py [OPTIONS] COMMAND [ARGS]...")
        print("\nAvailable commands:")
        print("  run     Build terrain and cost maps for a sequence")
        print("  eval    Score a sequence or synthetic scene")
        print("  ablate  Compare fusion and inference variants")
        print("  synth   Write a synthetic labelled sequence")
        print("  plan    Plan a path on a stored cost map")
        print("  --help  Show detailed help")
        sys.exit(0)

    try:
        cli()
    except KeyboardInterrupt:
        print("\n\nInterrupted by user", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
