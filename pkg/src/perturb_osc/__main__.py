from perturb_osc.cli import main
import sys
sys.exit(main())
