"""Entry point for python -m odesr."""

from odesr.cli import main

if __name__ == "__main__":
    main()
