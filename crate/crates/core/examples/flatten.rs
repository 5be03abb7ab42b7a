//! Resolves the corpus and shows what a refined machine inherits.

use eventb_kernel::corpus::load_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus()?;
    let flat = corpus.project.flatten_machine("MCP3")?;
    let sees = &corpus.project.machine("MCP3").expect("declared").sees;
    println!(
        "{} sees {:?} (ancestry {:?})",
        flat.name, sees, flat.ancestry
    );
    println!("variables: {}", flat.variables.join(", "));
    for (inv, origin) in flat.invariants.iter().zip(&flat.invariant_origin) {
        println!("  {:<6} from {origin}", inv.label);
    }
    for e in flat.transitions() {
        println!(
            "  event {:<30} declared in {:<5} refines {:?}{}",
            e.name(),
            e.origin,
            e.refines,
            if e.is_environment() {
                " (environment)"
            } else {
                ""
            }
        );
    }
    println!("refinement edges: {:?}", corpus.project.refinement_edges());
    Ok(())
}
