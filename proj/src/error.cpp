#include "fvsim/error.hpp"

namespace fvsim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::ProgramWithoutErase: return "ProgramWithoutErase";
    case Errc::GeometryMismatch: return "GeometryMismatch";
    case Errc::ImageCorrupt: return "ImageCorrupt";
    case Errc::DeviceLocked: return "DeviceLocked";
    case Errc::WrongPassword: return "WrongPassword";
    case Errc::PasswordTooLong: return "PasswordTooLong";
    case Errc::KeyAlreadyProgrammed: return "KeyAlreadyProgrammed";
    case Errc::KeyNotProgrammed: return "KeyNotProgrammed";
    case Errc::AddressOutOfRange: return "AddressOutOfRange";
    case Errc::TapNotEnabled: return "TapNotEnabled";
    case Errc::AlreadyProvisioned: return "AlreadyProvisioned";
    case Errc::NotProvisioned: return "NotProvisioned";
    case Errc::Destroyed: return "Destroyed";
    case Errc::ChannelNotEstablished: return "ChannelNotEstablished";
    case Errc::ChannelAuthFailed: return "ChannelAuthFailed";
    case Errc::ProfileMediaMismatch: return "ProfileMediaMismatch";
    case Errc::AlreadyUnlocked: return "AlreadyUnlocked";
    case Errc::DriveWiped: return "DriveWiped";
    case Errc::DriveLockedOrWiped: return "DriveLockedOrWiped";
    case Errc::IntegrityTagMismatch: return "IntegrityTagMismatch";
    case Errc::RpmbWriteRejected: return "RpmbWriteRejected";
    case Errc::DriveNotLocked: return "DriveNotLocked";
    case Errc::ProfileNotRpmb: return "ProfileNotRpmb";
    case Errc::BlobNotFound: return "BlobNotFound";
    case Errc::FormatUnknown: return "FormatUnknown";
    case Errc::ProfileNotEmmcLock: return "ProfileNotEmmcLock";
    case Errc::UnknownProfile: return "UnknownProfile";
    case Errc::BadScenario: return "BadScenario";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace fvsim
