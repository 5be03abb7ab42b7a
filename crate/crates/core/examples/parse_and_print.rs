//! Parses a machine, prints it back in canonical form and checks that the
//! printed text parses to the same definitions.

use eventb_kernel::parser::{parse_source, print_components};

const SRC: &str = "
CONTEXT Pump SETS State CONSTANTS On, Off AXIOMS typ1 partition(State, {On}, {Off}) END
MACHINE Switch SEES Pump
VARIABLES s, presses
INVARIANTS inv1 s : State inv2 presses : NAT
EVENTS
  Event INITIALISATION Then act1 s := Off act2 presses := 0 End
  Event toggle Where grd1 s = Off Then act1 s := On act2 presses := presses + 1 End
END
";

fn main() {
    let units = match parse_source(SRC) {
        Ok(u) => u,
        Err(errors) => {
            for e in errors {
                eprintln!("{e}");
            }
            std::process::exit(2);
        }
    };
    let printed = print_components(&units);
    println!("{printed}");
    let again = parse_source(&printed).expect("printed text parses");
    assert_eq!(
        print_components(&again),
        printed,
        "printing is a fixed point after one round"
    );

    // Errors carry positions.
    let errors = parse_source("MACHINE M VARIABLES x INVARIANTS inv1 x : END").unwrap_err();
    println!("diagnostic: {}", errors[0]);
}
