import sys

from ztdeps.cli import main

sys.exit(main())
