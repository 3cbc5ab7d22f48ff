#!/usr/bin/env python3
import sys

from bell_geometry.app import main

if __name__ == "__main__":
    sys.exit(main())
