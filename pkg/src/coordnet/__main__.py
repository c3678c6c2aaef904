import sys

from coordnet.cli import main

sys.exit(main())
