import sys

from stlpack.cli import main

sys.exit(main())
