import sys

from fplab.cli import main

sys.exit(main())
