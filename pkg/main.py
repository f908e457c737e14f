import sys

from curved_wiener.cli import main


if __name__ == "__main__":
    sys.exit(main())
