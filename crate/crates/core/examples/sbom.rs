//! Derive dependencies from a raw build log and emit an SPDX document.

use omnibor::sbom::{
    derive_buildtime_deps, derive_runtime_deps, generate_sbom, PackageDescriptor, PackageMapping,
};
use omnibor::trace::parse_raw_log;
use omnibor::{gitoid_of_bytes, HashAlgorithm};

const LOG: &str = include_str!("../tests/fixtures/sample_build.log");

fn main() -> omnibor::Result<()> {
    let records = parse_raw_log(LOG.as_bytes())?;
    let mapping = PackageMapping::parse(
        "/opt/rh/gcc-toolset-12 gcc 12 pkg:rpm/gcc@12\n/lib/lib64 glibc 2.35 pkg:rpm/glibc@2.35\n",
    )?;
    let runtime = derive_runtime_deps(&records, &mapping);
    let buildtime = derive_buildtime_deps(&records, &mapping);
    for path in &buildtime.unmapped {
        eprintln!("unmapped: {}", path.display());
    }

    let subject = PackageDescriptor::new("libmath", "1.0")
        .purl("pkg:generic/libmath@1.0")
        .im_oid(gitoid_of_bytes(b"libmath manifest", HashAlgorithm::Sha1));
    let doc = generate_sbom(
        &subject,
        &runtime.packages,
        &buildtime.packages,
        "2024-01-01T00:00:00Z",
    )?;
    print!("{}", doc.to_json());
    Ok(())
}
