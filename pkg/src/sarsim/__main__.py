from sarsim.cli import main
import sys

sys.exit(main())
