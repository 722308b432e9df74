import sys

from stabletopk.cli import main

sys.exit(main())
