//! `vnfpp inspect`: decode one genotype and print the resulting placement —
//! instance tables, routed paths with probabilities, constraint check, and
//! the queueing model's objectives.

use std::path::PathBuf;

use clap::Args;
use rand::Rng;
use vnfpp::encoding::{decode, placement_report, Genotype};
use vnfpp::eval::Evaluator;
use vnfpp::qos::ProposedModel;
use vnfpp::rng::rng_from_seed;
use vnfpp::verify::{check_phenotype, ALL_FAMILIES};

use crate::common::{self, Failure, QosArgs};

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Instance file produced by `generate`
    #[arg(long)]
    pub instance: PathBuf,
    /// Genotype as one token per VM slot separated by ';' — a service id or
    /// empty for an unused slot (default: all slots empty)
    #[arg(long, conflicts_with = "random_seed")]
    pub genotype: Option<String>,
    /// Sample a uniformly random genotype with this seed instead
    #[arg(long)]
    pub random_seed: Option<u64>,
    #[command(flatten)]
    pub qos: QosArgs,
}

fn parse_genotype(text: &str, num_slots: usize, num_services: usize) -> Result<Genotype, Failure> {
    let tokens: Vec<&str> = text.split(';').collect();
    if tokens.len() != num_slots {
        return Err(Failure::Usage(format!(
            "genotype has {} tokens but the instance has {num_slots} VM slots",
            tokens.len()
        )));
    }
    let mut slots = Vec::with_capacity(num_slots);
    for token in tokens {
        let token = token.trim();
        if token.is_empty() {
            slots.push(None);
            continue;
        }
        let service: usize = token
            .parse()
            .map_err(|_| Failure::Usage(format!("bad genotype token '{token}'")))?;
        if service >= num_services {
            return Err(Failure::Usage(format!(
                "genotype token '{token}' is not a service id (instance has {num_services})"
            )));
        }
        slots.push(Some(service));
    }
    Ok(Genotype { slots })
}

pub fn run(args: InspectArgs) -> Result<(), Failure> {
    let instance = common::load_instance(&args.instance)?;
    let qos = args.qos.to_config()?;
    let num_slots = instance.topology.num_vms();
    let num_services = instance.services.len();

    let genotype = match (&args.genotype, args.random_seed) {
        (Some(text), _) => parse_genotype(text, num_slots, num_services)?,
        (None, Some(seed)) => {
            let mut rng = rng_from_seed(seed);
            let slots = (0..num_slots)
                .map(|_| {
                    let marker = rng.gen_range(0..=num_services);
                    (marker < num_services).then_some(marker)
                })
                .collect();
            Genotype { slots }
        }
        (None, None) => Genotype::empty(num_slots),
    };

    let phenotype = decode(&genotype, &instance)
        .map_err(|e| Failure::Invalid(e.to_string()))?;

    println!(
        "instance: k={}, {} servers, {} VM slots, {} services, {} VNFs",
        instance.topology.k,
        instance.topology.num_servers(),
        num_slots,
        num_services,
        instance.vnfs.len()
    );
    print!("{}", placement_report(&instance, &phenotype));

    let violations = check_phenotype(&instance, &phenotype, ALL_FAMILIES);
    if violations.is_empty() {
        println!("constraints: ok");
    } else {
        for v in &violations {
            println!("constraint violation ({:?}): {}", v.family, v.detail);
        }
    }

    let model = ProposedModel { config: qos };
    match model.evaluate(&instance, &phenotype) {
        Ok(objectives) => println!(
            "objectives: latency {:.6} ms, packet loss {:.6}, energy {:.2} W",
            objectives[0], objectives[1], objectives[2]
        ),
        Err(e) => println!("objectives: not available ({e})"),
    }
    Ok(())
}
