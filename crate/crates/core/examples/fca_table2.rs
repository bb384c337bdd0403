//! Builds the concept lattice of the reference activity/attribute table and
//! prints every concept with its neighbours above.

use mhn_core::activity_fca::{build_lattice, enumerate_concepts, table2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = table2();
    let lattice = build_lattice(enumerate_concepts(&table)?)?;
    println!("{} objects x {} attributes -> {} concepts", table.objects.len(), table.attributes.len(), lattice.concepts.len());
    for (i, c) in lattice.concepts.iter().enumerate() {
        let objects: Vec<String> = (0..table.objects.len())
            .filter(|k| c.extent >> k & 1 == 1)
            .map(|k| table.objects[k].to_string())
            .collect();
        let attrs: Vec<&str> = (0..table.attributes.len())
            .filter(|k| c.intent >> k & 1 == 1)
            .map(|k| table.attributes[k].name.as_str())
            .collect();
        let above: Vec<usize> = (0..lattice.concepts.len()).filter(|&j| j != i && lattice.leq(i, j)).collect();
        println!("#{i}: {{{}}} x {{{}}}  below {above:?}", objects.join(", "), attrs.join(", "));
    }
    Ok(())
}
