//! The same goal planned at each relaxation level over a small domain.
//! Pass a micro-domain name (errands, audition, reunion or vault) and a
//! goal; the defaults plan `(cast me film)` in the audition domain.

use daydreamer::concept::Concept;
use daydreamer::domain::Domain;
use daydreamer::planner::{EventKind, PlanRequest, RelaxLevel};
use daydreamer::store::{ActivationConfig, WorkingMemory};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "audition".into());
    let goal = Concept::parse(&args.next().unwrap_or_else(|| "(cast me film)".into()))?;
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("data/micro/{name}.dd"));
    let domain = Domain::from_files(&[path])?;
    let wm = WorkingMemory::new(ActivationConfig::default());

    for level in RelaxLevel::ALL {
        let res = domain.planner.run(&wm, wm.real(), &PlanRequest::new(goal.clone(), level))?;
        println!("{level}: {:?} in {} steps", res.outcome, res.steps);
        for ev in &res.events {
            match ev.kind {
                EventKind::Action => println!("  do      {}", ev.payload),
                EventKind::Assumption => println!("  assume  {}", ev.payload),
                _ => {}
            }
        }
        if let Some(d) = &res.diagnostic {
            println!("  ({d})");
        }
    }
    Ok(())
}
