//! `.note.omnibor` ELF section writer and reader.
//!
//! Each note entry uses the standard ELF note layout: name size, descriptor
//! size, type, the 8-byte owner `OMNIBOR\0`, then the raw digest. A SHA-1 entry
//! is 40 bytes and a SHA-256 entry is 52, so a section carrying both is 92.
//!
//! The writer appends the section payload after the existing section data,
//! extends `.shstrtab` with the new name and rewrites the section header table
//! at the end of the file. Existing section contents and program headers are
//! left byte-for-byte intact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, IoContext, Result};
use crate::fsutil::write_atomic;
use crate::identifier::{ArtifactId, HashAlgorithm};

pub const NOTE_SECTION_NAME: &str = ".note.omnibor";
pub const NOTE_OWNER: &[u8; 8] = b"OMNIBOR\0";
pub const NT_GITOID_SHA1: u32 = 1;
pub const NT_GITOID_SHA256: u32 = 2;

const SHT_NOBITS: u32 = 8;
const SHT_NOTE: u32 = 7;
const SHF_ALLOC: u64 = 0x2;
const PT_LOAD: u32 = 1;
const SHN_LORESERVE: usize = 0xff00;
const SHN_XINDEX: usize = 0xffff;

pub const fn note_type(algo: HashAlgorithm) -> u32 {
    match algo {
        HashAlgorithm::Sha1 => NT_GITOID_SHA1,
        HashAlgorithm::Sha256 => NT_GITOID_SHA256,
    }
}

/// Bytes one note entry for `algo` occupies.
pub const fn entry_size(algo: HashAlgorithm) -> usize {
    12 + NOTE_OWNER.len() + algo.digest_len()
}

/// The OIDs to embed, at most one per algorithm. Iteration (and the on-disk
/// entry order) is SHA-1 first, then SHA-256.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OmniborNote {
    entries: BTreeMap<HashAlgorithm, ArtifactId>,
}

impl OmniborNote {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(ids: impl IntoIterator<Item = ArtifactId>) -> Self {
        let mut note = Self::new();
        for id in ids {
            note.insert(id);
        }
        note
    }

    /// Add or replace the entry for `id`'s algorithm.
    pub fn insert(&mut self, id: ArtifactId) -> Option<ArtifactId> {
        self.entries.insert(id.algo(), id)
    }

    pub fn get(&self, algo: HashAlgorithm) -> Option<ArtifactId> {
        self.entries.get(&algo).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ArtifactId> + '_ {
        self.entries.values().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn payload_len(&self) -> usize {
        self.entries.keys().map(|&a| entry_size(a)).sum()
    }

    pub fn to_payload(&self, endian: Endian) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload_len());
        for (algo, id) in &self.entries {
            endian.put_u32(&mut out, NOTE_OWNER.len() as u32);
            endian.put_u32(&mut out, algo.digest_len() as u32);
            endian.put_u32(&mut out, note_type(*algo));
            out.extend_from_slice(NOTE_OWNER);
            out.extend_from_slice(id.digest());
        }
        out
    }

    /// `readelf -n` style listing of the section.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("Displaying notes found in: .note.omnibor\n");
        out.push_str("Owner      Data size  Description\n");
        for (algo, id) in &self.entries {
            let (tname, label) = match algo {
                HashAlgorithm::Sha1 => ("NT_GITOID_SHA1", "SHA1"),
                HashAlgorithm::Sha256 => ("NT_GITOID_SHA256", "SHA256"),
            };
            let _ = writeln!(out, "OMNIBOR    0x{:08x} {tname}", algo.digest_len());
            let _ = writeln!(out, "{label} GitOID: {}", id.hex());
        }
        out
    }

    /// One `SHA1 GitOID: <hex>` line per entry.
    pub fn render_short(&self) -> String {
        self.entries
            .iter()
            .map(|(algo, id)| {
                let label = match algo {
                    HashAlgorithm::Sha1 => "SHA1",
                    HashAlgorithm::Sha256 => "SHA256",
                };
                format!("{label} GitOID: {}\n", id.hex())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u16(self, b: &[u8]) -> u16 {
        let a = [b[0], b[1]];
        match self {
            Endian::Little => u16::from_le_bytes(a),
            Endian::Big => u16::from_be_bytes(a),
        }
    }

    fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(a),
            Endian::Big => u32::from_be_bytes(a),
        }
    }

    fn u64(self, b: &[u8]) -> u64 {
        let mut a = [0u8; 8];
        a.copy_from_slice(&b[..8]);
        match self {
            Endian::Little => u64::from_le_bytes(a),
            Endian::Big => u64::from_be_bytes(a),
        }
    }

    fn put_u16(self, out: &mut Vec<u8>, v: u16) {
        match self {
            Endian::Little => out.extend_from_slice(&v.to_le_bytes()),
            Endian::Big => out.extend_from_slice(&v.to_be_bytes()),
        }
    }

    fn put_u32(self, out: &mut Vec<u8>, v: u32) {
        match self {
            Endian::Little => out.extend_from_slice(&v.to_le_bytes()),
            Endian::Big => out.extend_from_slice(&v.to_be_bytes()),
        }
    }

    fn put_u64(self, out: &mut Vec<u8>, v: u64) {
        match self {
            Endian::Little => out.extend_from_slice(&v.to_le_bytes()),
            Endian::Big => out.extend_from_slice(&v.to_be_bytes()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElfClass {
    Elf32,
    Elf64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElfKind {
    Relocatable,
    Executable,
    SharedObject,
    Other(u16),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SectionHeader {
    name: u32,
    sh_type: u32,
    flags: u64,
    addr: u64,
    offset: u64,
    size: u64,
    link: u32,
    info: u32,
    addralign: u64,
    entsize: u64,
}

impl SectionHeader {
    fn file_end(&self) -> u64 {
        if self.sh_type == SHT_NOBITS {
            self.offset
        } else {
            self.offset + self.size
        }
    }
}

#[derive(Debug, Clone)]
struct ProgramHeader {
    p_type: u32,
    offset: u64,
    filesz: u64,
    align: u64,
}

/// Parsed view of the parts of an ELF file the embedder touches.
#[derive(Debug, Clone)]
struct ElfFile {
    class: ElfClass,
    endian: Endian,
    e_type: u16,
    ehsize: u64,
    phoff: u64,
    phentsize: u64,
    shoff: u64,
    shentsize: u64,
    shstrndx: usize,
    sections: Vec<SectionHeader>,
    segments: Vec<ProgramHeader>,
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::ElfFormat(msg.into())
}

fn slice(bytes: &[u8], off: u64, len: u64) -> Result<&[u8]> {
    let start = usize::try_from(off).map_err(|_| fmt_err("offset overflow"))?;
    let len = usize::try_from(len).map_err(|_| fmt_err("length overflow"))?;
    let end = start
        .checked_add(len)
        .ok_or_else(|| fmt_err("range overflow"))?;
    bytes.get(start..end).ok_or_else(|| {
        fmt_err(format!(
            "range {start}..{end} beyond end of file ({} bytes)",
            bytes.len()
        ))
    })
}

impl ElfFile {
    fn parse(bytes: &[u8]) -> Result<ElfFile> {
        if bytes.len() < 16 || &bytes[..4] != b"\x7fELF" {
            return Err(fmt_err("not an ELF file"));
        }
        let class = match bytes[4] {
            1 => ElfClass::Elf32,
            2 => ElfClass::Elf64,
            c => return Err(fmt_err(format!("unknown ELF class {c}"))),
        };
        let endian = match bytes[5] {
            1 => Endian::Little,
            2 => Endian::Big,
            d => return Err(fmt_err(format!("unknown ELF data encoding {d}"))),
        };
        let ehsize_min = match class {
            ElfClass::Elf32 => 52,
            ElfClass::Elf64 => 64,
        };
        let h = slice(bytes, 0, ehsize_min)?;
        let e = endian;
        let e_type = e.u16(&h[16..]);
        let (phoff, shoff, rest) = match class {
            ElfClass::Elf32 => (e.u32(&h[28..]) as u64, e.u32(&h[32..]) as u64, &h[36..]),
            ElfClass::Elf64 => (e.u64(&h[32..]), e.u64(&h[40..]), &h[48..]),
        };
        // rest: flags(4) ehsize(2) phentsize(2) phnum(2) shentsize(2) shnum(2) shstrndx(2)
        let ehsize = e.u16(&rest[4..]) as u64;
        let phentsize = e.u16(&rest[6..]) as u64;
        let phnum = e.u16(&rest[8..]) as usize;
        let shentsize = e.u16(&rest[10..]) as u64;
        let mut shnum = e.u16(&rest[12..]) as usize;
        let mut shstrndx = e.u16(&rest[14..]) as usize;

        let want_shent = match class {
            ElfClass::Elf32 => 40,
            ElfClass::Elf64 => 64,
        };
        if shoff == 0 {
            return Err(fmt_err("file has no section header table"));
        }
        if shentsize != want_shent {
            return Err(fmt_err(format!(
                "unexpected section header size {shentsize}"
            )));
        }
        let read_sh = |idx: usize| -> Result<SectionHeader> {
            let b = slice(bytes, shoff + idx as u64 * shentsize, shentsize)?;
            Ok(match class {
                ElfClass::Elf32 => SectionHeader {
                    name: e.u32(&b[0..]),
                    sh_type: e.u32(&b[4..]),
                    flags: e.u32(&b[8..]) as u64,
                    addr: e.u32(&b[12..]) as u64,
                    offset: e.u32(&b[16..]) as u64,
                    size: e.u32(&b[20..]) as u64,
                    link: e.u32(&b[24..]),
                    info: e.u32(&b[28..]),
                    addralign: e.u32(&b[32..]) as u64,
                    entsize: e.u32(&b[36..]) as u64,
                },
                ElfClass::Elf64 => SectionHeader {
                    name: e.u32(&b[0..]),
                    sh_type: e.u32(&b[4..]),
                    flags: e.u64(&b[8..]),
                    addr: e.u64(&b[16..]),
                    offset: e.u64(&b[24..]),
                    size: e.u64(&b[32..]),
                    link: e.u32(&b[40..]),
                    info: e.u32(&b[44..]),
                    addralign: e.u64(&b[48..]),
                    entsize: e.u64(&b[56..]),
                },
            })
        };
        let first = read_sh(0)?;
        if shnum == 0 {
            shnum = first.size as usize;
        }
        if shstrndx == SHN_XINDEX {
            shstrndx = first.link as usize;
        }
        if shnum == 0 || shstrndx >= shnum {
            return Err(fmt_err("bad section count or string table index"));
        }
        let mut sections = Vec::with_capacity(shnum);
        sections.push(first);
        for i in 1..shnum {
            sections.push(read_sh(i)?);
        }
        for s in &sections {
            if s.sh_type != SHT_NOBITS && s.size > 0 {
                slice(bytes, s.offset, s.size)?;
            }
        }

        let mut segments = Vec::with_capacity(phnum);
        if phoff != 0 {
            for i in 0..phnum {
                let b = slice(bytes, phoff + i as u64 * phentsize, phentsize)?;
                segments.push(match class {
                    ElfClass::Elf32 => ProgramHeader {
                        p_type: e.u32(&b[0..]),
                        offset: e.u32(&b[4..]) as u64,
                        filesz: e.u32(&b[16..]) as u64,
                        align: e.u32(&b[28..]) as u64,
                    },
                    ElfClass::Elf64 => ProgramHeader {
                        p_type: e.u32(&b[0..]),
                        offset: e.u64(&b[8..]),
                        filesz: e.u64(&b[32..]),
                        align: e.u64(&b[48..]),
                    },
                });
            }
        }

        Ok(ElfFile {
            class,
            endian,
            e_type,
            ehsize: ehsize.max(ehsize_min),
            phoff,
            phentsize,
            shoff,
            shentsize,
            shstrndx,
            sections,
            segments,
        })
    }

    fn section_name<'a>(&self, bytes: &'a [u8], s: &SectionHeader) -> Result<&'a [u8]> {
        let strtab = &self.sections[self.shstrndx];
        let table = slice(bytes, strtab.offset, strtab.size)?;
        let start = s.name as usize;
        let tail = table
            .get(start..)
            .ok_or_else(|| fmt_err("section name offset out of range"))?;
        let end = tail.iter().position(|&b| b == 0).unwrap_or(tail.len());
        Ok(&tail[..end])
    }

    fn find_section(&self, bytes: &[u8], name: &str) -> Result<Option<usize>> {
        for (i, s) in self.sections.iter().enumerate().skip(1) {
            if self.section_name(bytes, s)? == name.as_bytes() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// End of everything except the section header table.
    fn content_end(&self) -> u64 {
        let mut end = self.ehsize;
        if self.phoff != 0 {
            end = end.max(self.phoff + self.phentsize * self.segments.len() as u64);
        }
        for s in &self.sections {
            end = end.max(s.file_end());
        }
        for p in &self.segments {
            end = end.max(p.offset + p.filesz);
        }
        end
    }

    fn sh_table_len(&self) -> u64 {
        self.shentsize * self.sections.len() as u64
    }

    fn write_section_header(&self, out: &mut Vec<u8>, s: &SectionHeader) {
        let e = self.endian;
        match self.class {
            ElfClass::Elf32 => {
                e.put_u32(out, s.name);
                e.put_u32(out, s.sh_type);
                e.put_u32(out, s.flags as u32);
                e.put_u32(out, s.addr as u32);
                e.put_u32(out, s.offset as u32);
                e.put_u32(out, s.size as u32);
                e.put_u32(out, s.link);
                e.put_u32(out, s.info);
                e.put_u32(out, s.addralign as u32);
                e.put_u32(out, s.entsize as u32);
            }
            ElfClass::Elf64 => {
                e.put_u32(out, s.name);
                e.put_u32(out, s.sh_type);
                e.put_u64(out, s.flags);
                e.put_u64(out, s.addr);
                e.put_u64(out, s.offset);
                e.put_u64(out, s.size);
                e.put_u32(out, s.link);
                e.put_u32(out, s.info);
                e.put_u64(out, s.addralign);
                e.put_u64(out, s.entsize);
            }
        }
    }

    /// Patch e_shoff / e_shnum in `out` for the current section list.
    fn patch_header(&self, out: &mut [u8], shoff: u64) -> Result<()> {
        let e = self.endian;
        let shnum = self.sections.len();
        let mut tmp = Vec::with_capacity(8);
        match self.class {
            ElfClass::Elf32 => {
                let shoff = u32::try_from(shoff).map_err(|_| fmt_err("ELF32 file too large"))?;
                e.put_u32(&mut tmp, shoff);
                out[32..36].copy_from_slice(&tmp);
            }
            ElfClass::Elf64 => {
                e.put_u64(&mut tmp, shoff);
                out[40..48].copy_from_slice(&tmp);
            }
        }
        let shnum_off = match self.class {
            ElfClass::Elf32 => 48,
            ElfClass::Elf64 => 60,
        };
        tmp.clear();
        e.put_u16(
            &mut tmp,
            if shnum >= SHN_LORESERVE {
                0
            } else {
                shnum as u16
            },
        );
        out[shnum_off..shnum_off + 2].copy_from_slice(&tmp);
        Ok(())
    }

    fn kind(&self) -> ElfKind {
        match self.e_type {
            1 => ElfKind::Relocatable,
            2 => ElfKind::Executable,
            3 => ElfKind::SharedObject,
            other => ElfKind::Other(other),
        }
    }
}

fn pad_to(out: &mut Vec<u8>, align: usize) {
    while !out.len().is_multiple_of(align) {
        out.push(0);
    }
}

pub fn is_elf(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && &bytes[..4] == b"\x7fELF"
}

pub fn elf_kind(bytes: &[u8]) -> Result<ElfKind> {
    Ok(ElfFile::parse(bytes)?.kind())
}

/// Largest alignment among sections and loadable segments.
pub fn alignment_unit(bytes: &[u8]) -> Result<u64> {
    let elf = ElfFile::parse(bytes)?;
    let sections = elf.sections.iter().map(|s| s.addralign);
    let segments = elf
        .segments
        .iter()
        .filter(|p| p.p_type == PT_LOAD)
        .map(|p| p.align);
    Ok(sections.chain(segments).max().unwrap_or(1).max(1))
}

/// Payload bytes of the `.note.omnibor` section, if present.
pub fn note_section_payload(bytes: &[u8]) -> Result<Option<Vec<u8>>> {
    let elf = ElfFile::parse(bytes)?;
    match elf.find_section(bytes, NOTE_SECTION_NAME)? {
        Some(i) => {
            let s = &elf.sections[i];
            Ok(Some(slice(bytes, s.offset, s.size)?.to_vec()))
        }
        None => Ok(None),
    }
}

/// Return a copy of `input` carrying `note` in a `.note.omnibor` section.
pub fn embed_elf(input: &[u8], note: &OmniborNote, replace: bool) -> Result<Vec<u8>> {
    if note.is_empty() {
        return Err(fmt_err("refusing to embed an empty note"));
    }
    let mut elf = ElfFile::parse(input)?;
    let payload = note.to_payload(elf.endian);
    let existing = elf.find_section(input, NOTE_SECTION_NAME)?;

    if let Some(idx) = existing {
        if !replace {
            return Err(Error::NoteConflict);
        }
        let s = &elf.sections[idx];
        if s.size as usize == payload.len() {
            let mut out = input.to_vec();
            let start = s.offset as usize;
            out[start..start + payload.len()].copy_from_slice(&payload);
            return Ok(out);
        }
    }

    let content_end = elf.content_end();
    let table_at_tail =
        elf.shoff >= content_end && elf.shoff + elf.sh_table_len() == input.len() as u64;
    let mut out = if table_at_tail {
        input[..content_end as usize].to_vec()
    } else {
        input.to_vec()
    };

    let name_off = if let Some(i) = existing {
        elf.sections[i].name
    } else {
        let name = format!("{NOTE_SECTION_NAME}\0");
        let strtab = elf.sections[elf.shstrndx].clone();
        if table_at_tail && strtab.file_end() == content_end {
            // string table is the last thing in the file: grow it in place
            out.extend_from_slice(name.as_bytes());
            elf.sections[elf.shstrndx].size += name.len() as u64;
            strtab.size as u32
        } else {
            let mut table = slice(input, strtab.offset, strtab.size)?.to_vec();
            let off = table.len() as u32;
            table.extend_from_slice(name.as_bytes());
            let s = &mut elf.sections[elf.shstrndx];
            s.offset = out.len() as u64;
            s.size = table.len() as u64;
            out.extend_from_slice(&table);
            off
        }
    };

    pad_to(&mut out, 4);
    let note_offset = out.len() as u64;
    out.extend_from_slice(&payload);

    let header = SectionHeader {
        name: name_off,
        sh_type: SHT_NOTE,
        flags: SHF_ALLOC,
        addr: 0,
        offset: note_offset,
        size: payload.len() as u64,
        link: 0,
        info: 0,
        addralign: 4,
        entsize: 0,
    };
    match existing {
        Some(idx) => elf.sections[idx] = header,
        None => elf.sections.push(header),
    }
    if elf.sections.len() >= SHN_LORESERVE {
        elf.sections[0].size = elf.sections.len() as u64;
    }

    pad_to(
        &mut out,
        match elf.class {
            ElfClass::Elf32 => 4,
            ElfClass::Elf64 => 8,
        },
    );
    let shoff = out.len() as u64;
    for s in &elf.sections {
        elf.write_section_header(&mut out, s);
    }
    elf.patch_header(&mut out, shoff)?;
    Ok(out)
}

/// Collect every OMNIBOR-owned note from the file's note sections.
pub fn extract_elf(input: &[u8]) -> Result<Option<OmniborNote>> {
    let elf = ElfFile::parse(input)?;
    let e = elf.endian;
    let mut note = OmniborNote::new();
    let mut found = false;
    for s in elf.sections.iter().filter(|s| s.sh_type == SHT_NOTE) {
        let data = slice(input, s.offset, s.size)?;
        let align = if s.addralign == 8 { 8 } else { 4 };
        let mut pos = 0usize;
        while pos < data.len() {
            let head = data.get(pos..pos + 12).ok_or_else(|| {
                fmt_err(format!(
                    "truncated note header at offset {}",
                    s.offset as usize + pos
                ))
            })?;
            let namesz = e.u32(&head[0..]) as usize;
            let descsz = e.u32(&head[4..]) as usize;
            let ntype = e.u32(&head[8..]);
            let name_start = pos + 12;
            let desc_start = (name_start + namesz).div_ceil(align) * align;
            let next = (desc_start + descsz).div_ceil(align) * align;
            if desc_start + descsz > data.len() {
                return Err(fmt_err(format!(
                    "truncated note at offset {}",
                    s.offset as usize + pos
                )));
            }
            let name = &data[name_start..name_start + namesz];
            if name == NOTE_OWNER {
                let desc = &data[desc_start..desc_start + descsz];
                let algo = match (ntype, descsz) {
                    (NT_GITOID_SHA1, 20) => Some(HashAlgorithm::Sha1),
                    (NT_GITOID_SHA256, 32) => Some(HashAlgorithm::Sha256),
                    (_, len) => HashAlgorithm::ALL
                        .into_iter()
                        .find(|a| a.digest_len() == len),
                };
                if let Some(algo) = algo {
                    note.insert(ArtifactId::from_digest(algo, desc)?);
                    found = true;
                }
            }
            pos = next.min(data.len()).max(pos + 12);
        }
    }
    Ok(found.then_some(note))
}

/// Embed into a file on disk, replacing it atomically.
pub fn embed_elf_file(path: &Path, note: &OmniborNote, replace: bool) -> Result<()> {
    let bytes = std::fs::read(path).with_path(path)?;
    let out = embed_elf(&bytes, note, replace)?;
    write_atomic(path, &out)
}

pub fn extract_elf_file(path: &Path) -> Result<Option<OmniborNote>> {
    let bytes = std::fs::read(path).with_path(path)?;
    extract_elf(&bytes)
}
