import sys

from solidopt.cli import main

sys.exit(main())
