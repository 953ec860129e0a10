# quasispec.py
"""
quasispec.py: Command-line entry point.

Example usage:

    $ python quasispec.py spectrum --alpha 0.5 --beta 0 --a 1.5707963 --nmax 6
    $ python quasispec.py --verbose metric general --alpha 1 --beta 1 --c 0 --a 1 --hs
"""
from src.cli import main

if __name__ == "__main__":
    main()
