from activeflux.cli import main

main()
