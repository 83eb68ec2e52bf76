"""
Entry point per esecuzione come modulo: python -m iosuav

Usage:
    python -m iosuav run --out results/
    python -m iosuav validate --level fast
    python -m iosuav init-config config.yaml
"""

import sys

from iosuav.interfaces.cli import main

if __name__ == '__main__':
    sys.exit(main())
