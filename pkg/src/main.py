import sys
from pathlib import Path

# Add the src directory to Python path
src_dir = str(Path(__file__).parent.parent)
if src_dir not in sys.path:
    sys.path.insert(0, src_dir)

from src.cli.commands import main as cli_main


def main():
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
