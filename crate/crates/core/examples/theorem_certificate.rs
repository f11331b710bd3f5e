// Builds the three constraint families and prints the certificate that no
// state satisfies all of them.

use noflip::theorem::verify_theorem1;

pub fn run() -> noflip::Result<()> {
    let cert = verify_theorem1()?;
    print!("{}", cert.render());
    for e in &cert.exclusions {
        println!("{}&{} point leaves family {}: {}", e.pair.0, e.pair.1, e.third, e.violation);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> noflip::Result<()> {
    run()
}
