//! Compiles predicates against a machine and evaluates them in a state.

use eventb_kernel::corpus::load_corpus;
use eventb_kernel::parser::parse_expr;
use eventb_kernel::semantics::Model;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let model = Model::new(&corpus.project, "MTM0", &corpus.manifest.config.consts)?;
    let mut state = model.initial_state()?;
    let temp = model.var_index("dialysateTemperature").expect("declared");
    state[temp] = model.parse_value(temp, "42")?;

    let scope = model.scope();
    for text in [
        "dialysateTemperature > 41",
        "dialyserState = {Dialysate |-> DialyserDisconnected}",
        "softwareMode = Preparation & (operation = Priming or operation = Rinsing)",
        "dialysateTemperature / (dialysateTemperature - 42) = 0",
        "dialysateTemperature - 50 = 0",
    ] {
        let term = scope.predicate(&parse_expr(text)?)?;
        match term.eval_bool(&state) {
            Ok(b) => println!("{text:<55} {b}"),
            Err(wd) => println!("{text:<55} ill-defined: {wd}"),
        }
    }
    // Type errors are reported at compile time.
    let err = scope.predicate(&parse_expr("alarm + 1 = 2")?).unwrap_err();
    println!("type error: {err}");
    Ok(())
}
