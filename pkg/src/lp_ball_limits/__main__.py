import sys

from lp_ball_limits.cli import main

sys.exit(main())
