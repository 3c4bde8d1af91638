#!/usr/bin/env python3
from seaqtsim.cli import main

if __name__ == "__main__":
    main()
