from fcqn.cli import main

main()
