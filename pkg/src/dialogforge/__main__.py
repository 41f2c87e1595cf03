import sys

from dialogforge.cli import main

sys.exit(main())
